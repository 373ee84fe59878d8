#include "doctest.h"

#include <cmath>

#include "baselines.hpp"
#include "gradcheck.hpp"
#include "model.hpp"

using namespace cdln;

namespace {

RunConfig toy_cfg(const std::string& model = "cdln") {
    RunConfig cfg;
    cfg.model = model;
    cfg.seed = 44;
    cfg.embedding_dim = 4;
    cfg.rvnn_hidden = 6;
    cfg.max_tokens = 12;
    cfg.max_sentence_len = 8;
    cfg.conv_width = 3;
    cfg.pool_width = 2;
    cfg.channels = 2;
    cfg.rounds = 2;
    cfg.conv_stride = 1;
    cfg.pool_stride = 2;
    cfg.lstm_hidden = 8;
    cfg.dense_width = 6;
    cfg.min_count = 1;
    cfg.dropout_rate = 0.3;
    return cfg;
}

Vocabulary toy_vocab() {
    std::vector<TokenizedEssay> corpus{tokenize_essay("the dog is here. the cat runs away.")};
    return Vocabulary::build(corpus, 1);
}

}  // namespace

TEST_CASE("fuse_vectors frame arithmetic") {
    Tape tape;
    SUBCASE("384 + 100 pads to five frames of 100") {
        auto cnn = tape.constant(Tensor::zeros({384}));
        auto rvnn = tape.constant(Tensor::zeros({100}));
        auto frames = fuse_vectors(tape, cnn, rvnn, 100);
        CHECK(frames.size() == 5);
        for (auto f : frames) CHECK(tape.value(f).size() == 100);
    }
    SUBCASE("exact multiple needs no padding") {
        auto cnn = tape.constant(Tensor::zeros({100}));
        auto rvnn = tape.constant(Tensor::zeros({100}));
        auto frames = fuse_vectors(tape, cnn, rvnn, 100);
        CHECK(frames.size() == 2);
    }
    SUBCASE("tail carries the structural vector and padding zeros") {
        Tensor cnn_v({8});
        cnn_v.fill(2.0);
        Tensor rvnn_v({5});
        rvnn_v.fill(3.0);
        auto frames = fuse_vectors(tape, tape.constant(cnn_v), tape.constant(rvnn_v), 4);
        REQUIRE(frames.size() == 4);  // 13 -> 16 positions
        CHECK(tape.value(frames[2])[0] == 3.0);  // structural values start at position 8
        CHECK(tape.value(frames[3])[1] == 3.0);
        CHECK(tape.value(frames[3])[2] == 0.0);  // padding tail
        CHECK(tape.value(frames[3])[3] == 0.0);
    }
}

TEST_CASE("lstm cell with zero parameters collapses to zero output") {
    LstmCell cell("z", 3, 4, 1);
    for (Parameter* p : cell.parameters()) p->value.fill(0.0);
    Tape tape;
    auto ctx = cell.bind(tape);
    Rng rng(5);
    std::vector<Tape::NodeId> frames{tape.constant(Tensor::uniform({3}, rng, -1, 1)),
                                     tape.constant(Tensor::uniform({3}, rng, -1, 1))};
    auto h = cell.run(tape, ctx, frames);
    for (double v : tape.value(h).values()) CHECK(v == 0.0);
}

TEST_CASE("lstm handles a single frame and rejects an empty sequence") {
    LstmCell cell("s", 3, 4, 2);
    Tape tape;
    auto ctx = cell.bind(tape);
    Rng rng(6);
    std::vector<Tape::NodeId> one{tape.constant(Tensor::uniform({3}, rng, -1, 1))};
    auto h = cell.run(tape, ctx, one);
    CHECK(tape.value(h).size() == 4);
    std::vector<Tape::NodeId> none;
    CHECK_THROWS_AS(cell.run(tape, ctx, none), error);
}

TEST_CASE("lstm gate gradients pass finite differences on three frames") {
    LstmCell cell("fd", 3, 4, 7);
    Rng rng(11);
    std::vector<Tensor> frames{Tensor::uniform({3}, rng, -1, 1),
                               Tensor::uniform({3}, rng, -1, 1),
                               Tensor::uniform({3}, rng, -1, 1)};
    auto params = cell.parameters();
    auto run = [&](bool grad) {
        Tape tape;
        auto ctx = cell.bind(tape);
        std::vector<Tape::NodeId> ids;
        for (const Tensor& f : frames) ids.push_back(tape.constant(f));
        auto loss = tape.sum(tape.activation(Activation::tanh, cell.run(tape, ctx, ids)));
        if (grad) tape.backward(loss);
        return tape.value(loss)[0];
    };
    auto loss_fn = [&] { return run(false); };
    auto grad_fn = [&] {
        for (Parameter* p : params) p->zero_grad();
        run(true);
    };
    auto rep = finite_diff_check(params, loss_fn, grad_fn);
    CHECK_MESSAGE(rep.pass, rep.summary());
}

TEST_CASE("dense head") {
    SUBCASE("zero parameters give sigmoid(0) = 0.5") {
        DenseHead head("z", 5, 4, 1);
        for (Parameter* p : head.parameters()) p->value.fill(0.0);
        Tape tape;
        auto ctx = head.bind(tape);
        Rng rng(3);
        auto out = head.forward(tape, ctx, tape.constant(Tensor::uniform({5}, rng, -1, 1)), false,
                                0.3, 0);
        CHECK(tape.value(out)[0] == doctest::Approx(0.5));
    }
    SUBCASE("inference is dropout-free and deterministic") {
        DenseHead head("d", 5, 4, 9);
        Rng rng(4);
        Tensor input = Tensor::uniform({5}, rng, -1, 1);
        auto once = [&](std::uint64_t seed) {
            Tape tape;
            auto ctx = head.bind(tape);
            auto out = head.forward(tape, ctx, tape.constant(input), false, 0.5, seed);
            return tape.value(out)[0];
        };
        CHECK(once(1) == once(2));
    }
    SUBCASE("output stays strictly inside (0,1)") {
        DenseHead head("r", 5, 4, 10);
        Rng rng(12);
        for (int trial = 0; trial < 20; ++trial) {
            Tape tape;
            auto ctx = head.bind(tape);
            auto out = head.forward(tape, ctx,
                                    tape.constant(Tensor::uniform({5}, rng, -50, 50)), false, 0.0,
                                    0);
            CHECK(tape.value(out)[0] > 0.0);
            CHECK(tape.value(out)[0] < 1.0);
        }
    }
}

TEST_CASE("cdln forward") {
    RunConfig cfg = toy_cfg();
    CdlnModel model(cfg, toy_vocab());
    TokenizedEssay essay = tokenize_essay("the dog is here. a cat runs.");

    SUBCASE("deterministic and in range at inference") {
        const double a = model.predict(essay);
        const double b = model.predict(essay);
        CHECK(a == b);
        CHECK(a > 0.0);
        CHECK(a < 1.0);
    }
    SUBCASE("frozen-structure forward matches when structures are unperturbed") {
        FrozenParse frozen = model.parse_structures(essay);
        Tape tape;
        auto out = model.forward_frozen(tape, essay, frozen);
        CHECK(tape.value(out)[0] == model.predict(essay));
    }
    SUBCASE("empty essay rejected") {
        TokenizedEssay empty;
        Tape tape;
        CHECK_THROWS_AS(model.forward(tape, empty, false, 0), error);
    }
    SUBCASE("training mode applies dropout noise by seed") {
        Tape t1, t2, t3;
        const double a = t1.value(model.forward(t1, essay, true, 101))[0];
        const double b = t2.value(model.forward(t2, essay, true, 101))[0];
        const double c = t3.value(model.forward(t3, essay, true, 202))[0];
        CHECK(a == b);       // same dropout seed
        CHECK(a != c);       // different dropout mask
    }
}

TEST_CASE("all neural grader kinds produce in-range deterministic outputs") {
    for (const char* kind : {"cdln", "rnn", "ann", "lstm"}) {
        RunConfig cfg = toy_cfg(kind);
        cfg.rnn_hidden = 5;
        cfg.ann_hidden = 6;
        cfg.lstm_baseline_hidden = 7;
        auto model = make_neural_grader(kind, cfg, toy_vocab());
        TokenizedEssay essay = tokenize_essay("the dog is here. a cat runs.");
        const double a = model->predict(essay);
        CHECK(a > 0.0);
        CHECK(a < 1.0);
        CHECK(a == model->predict(essay));
    }
    RunConfig cfg = toy_cfg();
    CHECK_THROWS_AS(make_neural_grader("bert", cfg, toy_vocab()), error);
}

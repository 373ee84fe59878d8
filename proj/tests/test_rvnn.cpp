#include "doctest.h"

#include <cmath>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "rvnn.hpp"

using namespace cdln;

namespace {

Tensor random_embeddings(std::size_t T, std::size_t E, std::uint64_t seed) {
    Rng rng(seed);
    return Tensor::uniform({T, E}, rng, -0.5, 0.5);
}

}  // namespace

TEST_CASE("composition with zero parameters yields zero vector and score") {
    CompositionNet net(4, 6, 1);
    for (Parameter* p : net.parameters()) p->value.fill(0.0);
    Rng rng(2);
    auto out = net.compose(Tensor::uniform({4}, rng, -1, 1), Tensor::uniform({4}, rng, -1, 1));
    for (double v : out.p.values()) CHECK(v == 0.0);
    CHECK(out.s == 0.0);
}

TEST_CASE("composition is deterministic and matches its tape replay bit for bit") {
    CompositionNet net(5, 7, 11);
    Rng rng(3);
    Tensor left = Tensor::uniform({5}, rng, -1, 1);
    Tensor right = Tensor::uniform({5}, rng, -1, 1);

    auto a = net.compose(left, right);
    auto b = net.compose(left, right);
    for (std::size_t i = 0; i < a.p.size(); ++i) CHECK(a.p[i] == b.p[i]);
    CHECK(a.s == b.s);

    Tape tape;
    auto ctx = net.bind(tape);
    auto [p_node, s_node] =
        net.compose_on_tape(tape, ctx, tape.constant(left), tape.constant(right));
    for (std::size_t i = 0; i < a.p.size(); ++i) CHECK(tape.value(p_node)[i] == a.p[i]);
    CHECK(tape.value(s_node)[0] == a.s);
}

TEST_CASE("composition rejects mismatched child dimensions") {
    CompositionNet net(4, 6, 1);
    CHECK_THROWS_AS(net.compose(Tensor({3}), Tensor({4})), error);
}

TEST_CASE("composition score gradient passes finite differences") {
    CompositionNet net(4, 5, 21);
    Rng rng(9);
    Tensor left = Tensor::uniform({4}, rng, -1, 1);
    Tensor right = Tensor::uniform({4}, rng, -1, 1);
    auto params = net.parameters();
    auto run = [&](bool grad) {
        Tape tape;
        auto ctx = net.bind(tape);
        auto [p_node, s_node] =
            net.compose_on_tape(tape, ctx, tape.constant(left), tape.constant(right));
        (void)p_node;
        if (grad) tape.backward(s_node);
        return tape.value(s_node)[0];
    };
    auto loss_fn = [&] { return run(false); };
    auto grad_fn = [&] {
        for (Parameter* p : params) p->zero_grad();
        run(true);
    };
    auto rep = finite_diff_check(params, loss_fn, grad_fn);
    CHECK_MESSAGE(rep.pass, rep.summary());
}

TEST_CASE("two-token parse is a single composition") {
    CompositionNet net(4, 6, 31);
    Tensor embeds = random_embeddings(2, 4, 5);
    auto parsed = parse_sentence(net, embeds);
    CHECK(parsed.chart.compositions() == 1);

    std::vector<double> left(embeds.data(), embeds.data() + 4);
    std::vector<double> right(embeds.data() + 4, embeds.data() + 8);
    auto direct = net.compose(Tensor({4}, left), Tensor({4}, right));
    CHECK(parsed.root_score == doctest::Approx(direct.s));
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(parsed.root_vector[i] == doctest::Approx(direct.p[i]));
    CHECK(parsed.chart.split(0, 1) == 0);
}

TEST_CASE("single-token parse returns the embedding with score zero") {
    CompositionNet net(4, 6, 31);
    Tensor embeds = random_embeddings(1, 4, 6);
    auto parsed = parse_sentence(net, embeds);
    CHECK(parsed.root_score == 0.0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(parsed.root_vector[i] == embeds[i]);
    CHECK(parsed.chart.compositions() == 0);
}

TEST_CASE("empty sentence rejected, overlong sentence truncated") {
    CompositionNet net(4, 6, 31);
    CHECK_THROWS_AS(parse_sentence(net, Tensor({1, 4}), 0), error);
    // T=0 cannot even be constructed as a tensor; a [0 x E] shape is invalid
    CHECK_THROWS_AS(Tensor({0, 4}), error);

    Tensor embeds = random_embeddings(6, 4, 7);
    auto parsed = parse_sentence(net, embeds, 4);
    CHECK(parsed.truncated);
    CHECK(parsed.chart.length() == 4);
}

TEST_CASE("three-token parse equals the better of both bracketings") {
    // At T=3 the chart recurrence and whole-tree enumeration coincide exactly.
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        CompositionNet net(4, 6, derive_seed(77, seed));
        Tensor embeds = random_embeddings(3, 4, derive_seed(78, seed));
        auto row = [&](std::size_t i) {
            std::vector<double> v(embeds.data() + i * 4, embeds.data() + (i + 1) * 4);
            return Tensor({4}, std::move(v));
        };

        auto left_first = net.compose(row(0), row(1));
        auto left_tree = net.compose(left_first.p, row(2));
        const double score_left = left_first.s + left_tree.s;

        auto right_first = net.compose(row(1), row(2));
        auto right_tree = net.compose(row(0), right_first.p);
        const double score_right = right_first.s + right_tree.s;

        auto parsed = parse_sentence(net, embeds);
        CHECK(parsed.root_score == doctest::Approx(std::max(score_left, score_right)).epsilon(1e-12));
        const Tensor& expect_vec = score_left >= score_right ? left_tree.p : right_tree.p;
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(parsed.root_vector[i] == doctest::Approx(expect_vec[i]).epsilon(1e-12));
    }
}

TEST_CASE("chart equals exhaustive recursive enumeration for T in 2..8") {
    for (std::size_t T = 2; T <= 8; ++T) {
        std::size_t checked = 0;
        for (std::uint64_t draw = 0; draw < 10; ++draw) {  // acceptance suite runs the full 100
            CompositionNet net(4, 6, derive_seed(1000 + T, draw));
            Tensor embeds = random_embeddings(T, 4, derive_seed(2000 + T, draw));
            auto parsed = parse_sentence(net, embeds);
            auto oracle = oracles::exhaustive_best(net, embeds, 0, T - 1);
            CHECK(oracle.trees_visited == oracles::catalan(T - 1));
            CHECK(std::fabs(parsed.root_score - oracle.score) < 1e-9);
            for (std::size_t i = 0; i < 4; ++i)
                CHECK(std::fabs(parsed.root_vector[i] - oracle.vec[i]) < 1e-9);
            ++checked;
        }
        CHECK(checked == 10);
    }
}

TEST_CASE("chart invariants") {
    CompositionNet net(4, 6, 55);
    SUBCASE("leaf spans always score zero") {
        for (std::size_t T : {1u, 3u, 6u}) {
            auto parsed = parse_sentence(net, random_embeddings(T, 4, T));
            for (std::size_t i = 0; i < T; ++i) CHECK(parsed.chart.score(i, i) == 0.0);
        }
    }
    SUBCASE("composition count is the span-width sum") {
        for (std::size_t T = 2; T <= 9; ++T) {
            auto parsed = parse_sentence(net, random_embeddings(T, 4, 100 + T));
            std::uint64_t expected = 0;
            for (std::size_t w = 2; w <= T; ++w) expected += (T - w + 1) * (w - 1);
            CHECK(parsed.chart.compositions() == expected);
        }
    }
    SUBCASE("recurrence holds at every cell") {
        const std::size_t T = 6;
        auto parsed = parse_sentence(net, random_embeddings(T, 4, 321));
        const SpanChart& chart = parsed.chart;
        for (std::size_t w = 2; w <= T; ++w) {
            for (std::size_t i = 0; i + w <= T; ++i) {
                const std::size_t j = i + w - 1;
                double best = -std::numeric_limits<double>::infinity();
                int best_k = -1;
                for (std::size_t k = i; k < j; ++k) {
                    auto c = net.compose(chart.vec(i, k), chart.vec(k + 1, j));
                    const double cand = chart.score(i, k) + chart.score(k + 1, j) + c.s;
                    if (cand > best) {
                        best = cand;
                        best_k = static_cast<int>(k);
                    }
                }
                CHECK(chart.score(i, j) == doctest::Approx(best).epsilon(1e-12));
                CHECK(chart.split(i, j) == best_k);
            }
        }
    }
}

TEST_CASE("replayed structure reproduces the chart root bit for bit") {
    CompositionNet net(4, 6, 91);
    const std::size_t T = 5;
    Tensor embeds = random_embeddings(T, 4, 17);
    auto parsed = parse_sentence(net, embeds);
    TreeStructure tree = structure_of(parsed.chart);

    Tape tape;
    auto ctx = net.bind(tape);
    std::vector<Tape::NodeId> leaves;
    for (std::size_t i = 0; i < T; ++i) {
        std::vector<double> row(embeds.data() + i * 4, embeds.data() + (i + 1) * 4);
        leaves.push_back(tape.constant(Tensor({4}, std::move(row))));
    }
    Tape::NodeId root = replay_structure(net, tape, ctx, tree, leaves);
    for (std::size_t i = 0; i < 4; ++i) CHECK(tape.value(root)[i] == parsed.root_vector[i]);
}

TEST_CASE("bracketing renders the chosen tree") {
    CompositionNet net(3, 4, 7);
    Tensor embeds = random_embeddings(4, 3, 3);
    auto parsed = parse_sentence(net, embeds);
    std::vector<std::string> tokens{"the", "dog", "is", "here"};
    std::string rendered = parsed.chart.bracketing(tokens);
    CHECK(rendered.find("the") != std::string::npos);
    CHECK(rendered.find("(") == 0);
    // a full binary tree over 4 leaves has exactly 3 internal nodes
    CHECK(std::count(rendered.begin(), rendered.end(), '(') == 3);
}

// Finite-difference verification suite and the chart-parse debug view.

#include <cstdio>
#include <sstream>

#include "engine.hpp"
#include "gradcheck.hpp"

namespace cdln {

namespace {

std::string fmt_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", v);
    return buf;
}

FdReport check_params(std::vector<Parameter*> params, const std::function<double(bool)>& run,
                      double eps = 1e-5, double tol = 1e-4) {
    auto loss_fn = [&run] { return run(false); };
    auto grad_fn = [&] {
        for (Parameter* p : params) p->zero_grad();
        run(true);
    };
    return finite_diff_check(params, loss_fn, grad_fn, eps, tol);
}

FdReport worst_of(const FdReport& a, const FdReport& b) {
    FdReport out = a.max_rel_err >= b.max_rel_err ? a : b;
    out.pass = a.pass && b.pass;
    out.elements_checked = a.elements_checked + b.elements_checked;
    out.tolerance = a.tolerance;
    return out;
}

FdReport primitive_linear_activation() {
    FdReport acc;
    acc.pass = true;
    acc.tolerance = 1e-4;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Rng rng(derive_seed(31, seed));
        const std::size_t m = 1 + rng.below(5), n = 1 + rng.below(5);
        Parameter W("W", Tensor::uniform({m, n}, rng, -1, 1));
        Parameter x("x", Tensor::uniform({n}, rng, -1, 1));
        Parameter b("b", Tensor::uniform({m}, rng, -1, 1));
        auto run = [&](bool grad) {
            Tape tape;
            auto act = tape.activation(static_cast<Activation>(seed % 3),
                                       tape.linear(tape.param(W), tape.param(x), tape.param(b)));
            auto loss = tape.sum(act);
            if (grad) tape.backward(loss);
            return tape.value(loss)[0];
        };
        acc = worst_of(acc, check_params({&W, &x, &b}, run));
    }
    return acc;
}

FdReport primitive_conv_pool() {
    FdReport acc;
    acc.pass = true;
    acc.tolerance = 1e-4;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Rng rng(derive_seed(37, seed));
        const std::size_t c_in = 1 + rng.below(2), c_out = 1 + rng.below(2);
        const std::size_t L = 5 + rng.below(9), K = 1 + rng.below(4);
        const std::size_t stride = 1 + rng.below(2);
        Parameter sig("sig", Tensor::uniform({c_in, L}, rng, -1, 1));
        if (seed % 2)  // exercise the zero-suffix fast path
            for (std::size_t c = 0; c < c_in; ++c)
                for (std::size_t i = L - L / 3; i < L; ++i) sig.value.at(c, i) = 0.0;
        Parameter ker("ker", Tensor::uniform({c_out, c_in, K}, rng, -1, 1));
        const Padding pad = seed % 2 ? Padding::same : Padding::valid;
        auto run = [&](bool grad) {
            Tape tape;
            auto conv = tape.conv1d(tape.param(sig), tape.param(ker), stride, pad);
            auto relu = tape.activation(Activation::relu, conv);
            auto pooled = tape.avgpool1d(tape.pad1d(relu, 1, 1), 2, 2);
            auto loss = tape.dot(tape.flatten(pooled), tape.flatten(pooled));
            if (grad) tape.backward(loss);
            return tape.value(loss)[0];
        };
        acc = worst_of(acc, check_params({&sig, &ker}, run));
    }
    return acc;
}

FdReport primitive_misc() {
    FdReport acc;
    acc.pass = true;
    acc.tolerance = 1e-4;
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        Rng rng(derive_seed(41, seed));
        const std::size_t V = 3 + rng.below(4), E = 2 + rng.below(3);
        Parameter table("table", Tensor::uniform({V, E}, rng, -1, 1));
        Parameter v("v", Tensor::uniform({E}, rng, -1, 1));
        std::vector<std::size_t> idx{rng.below(V), rng.below(V), rng.below(V)};
        auto run = [&](bool grad) {
            Tape tape;
            auto rows = tape.rows(tape.param(table), idx);
            auto mean = tape.mean_rows(rows);
            auto dropped = tape.dropout(mean, 0.3, true, 99 + seed);
            auto prod = tape.mul(dropped, tape.param(v));
            std::vector<Tape::NodeId> parts{prod, tape.slice(tape.flatten(rows), 0, E)};
            auto cat = tape.concat(parts);
            auto loss = tape.dot(cat, cat);
            if (grad) tape.backward(loss);
            return tape.value(loss)[0];
        };
        acc = worst_of(acc, check_params({&table, &v}, run));
    }
    return acc;
}

std::vector<TokenizedEssay> toy_corpus() {
    return {
        tokenize_essay("The dog is here. It runs fast and barks."),
        tokenize_essay("A small cat sat near the door, watching birds."),
    };
}

RunConfig toy_config(const std::string& kind) {
    RunConfig cfg;
    cfg.model = kind;
    cfg.seed = 977;
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
    cfg.rnn_hidden = 5;
    cfg.ann_hidden = 6;
    cfg.lstm_baseline_hidden = 7;
    cfg.min_count = 1;
    cfg.dropout_rate = 0.0;
    return cfg;
}

FdReport model_check(const std::string& kind) {
    RunConfig cfg = toy_config(kind);
    std::vector<TokenizedEssay> corpus = toy_corpus();
    std::vector<double> targets{0.2, 0.8};
    Vocabulary vocab = Vocabulary::build(corpus, 1);

    std::unique_ptr<NeuralGrader> model = make_neural_grader(kind, cfg, std::move(vocab));
    CdlnModel* as_cdln = dynamic_cast<CdlnModel*>(model.get());
    std::vector<FrozenParse> frozen;
    if (as_cdln)
        for (const TokenizedEssay& essay : corpus)
            frozen.push_back(as_cdln->parse_structures(essay));

    auto forward_one = [&](Tape& tape, std::size_t i) {
        return as_cdln ? as_cdln->forward_frozen(tape, corpus[i], frozen[i])
                       : model->forward(tape, corpus[i], false, 0);
    };
    auto run = [&](bool grad) {
        double total = 0.0;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            Tape tape;
            Tape::NodeId pred = forward_one(tape, i);
            Tape::NodeId diff = tape.axpb(pred, 1.0, -targets[i]);
            Tape::NodeId loss =
                tape.scale(tape.mul(diff, diff), 1.0 / static_cast<double>(corpus.size()));
            if (grad) tape.backward(loss);
            total += tape.value(loss)[0];
        }
        return total;
    };
    return check_params(model->parameters(), run);
}

}  // namespace

GradcheckOutcome run_gradcheck_suite() {
    GradcheckOutcome outcome;
    outcome.pass = true;
    std::ostringstream out;

    auto record = [&](const std::string& name, const FdReport& rep) {
        outcome.pass = outcome.pass && rep.pass;
        out << (rep.pass ? "PASS" : "FAIL") << " " << name << ": max rel err "
            << fmt_sci(rep.max_rel_err) << " over " << rep.elements_checked << " elements\n";
    };

    record("primitive linear+activation", primitive_linear_activation());
    record("primitive conv+pool", primitive_conv_pool());
    record("primitive gather/dropout/concat", primitive_misc());
    record("model cdln (structure frozen)", model_check("cdln"));
    record("model rnn", model_check("rnn"));
    record("model ann", model_check("ann"));
    record("model lstm", model_check("lstm"));

    out << (outcome.pass ? "gradcheck: all checks passed" : "gradcheck: FAILURES above") << "\n";
    outcome.report = out.str();
    return outcome;
}

std::string parse_debug(const RunConfig& cfg, const std::string& sentence, Grader* grader) {
    TokenizedEssay tok = tokenize_essay(sentence);
    if (tok.tokens.empty()) fail(errc::data, "parse-debug: sentence has no tokens");
    const auto [begin, end] = tok.sentences.front();
    std::vector<std::string> tokens(tok.tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                                    tok.tokens.begin() + static_cast<std::ptrdiff_t>(end));

    std::ostringstream out;
    if (tok.sentences.size() > 1)
        out << "note: input has " << tok.sentences.size()
            << " sentences; parsing the first one only\n";

    CdlnModel* trained = grader ? dynamic_cast<CdlnModel*>(grader->neural()) : nullptr;

    std::unique_ptr<CompositionNet> own_net;
    std::unique_ptr<EmbeddingTable> own_table;
    CompositionNet* net = nullptr;
    const Tensor* table = nullptr;
    std::size_t E = 0;
    std::vector<std::size_t> indices;

    if (trained) {
        net = &trained->composition();
        table = &trained->table().weights().value;
        E = trained->table().dim();
        for (const std::string& t : tokens) indices.push_back(trained->vocab().index_of(t));
    } else {
        std::vector<TokenizedEssay> corpus{tok};
        Vocabulary vocab = Vocabulary::build(corpus, 1);
        own_table = std::make_unique<EmbeddingTable>(
            vocab.size(), static_cast<std::size_t>(cfg.embedding_dim), cfg.seed);
        own_net = std::make_unique<CompositionNet>(static_cast<std::size_t>(cfg.embedding_dim),
                                                   static_cast<std::size_t>(cfg.rvnn_hidden),
                                                   cfg.seed);
        net = own_net.get();
        table = &own_table->weights().value;
        E = own_table->dim();
        for (const std::string& t : tokens) indices.push_back(vocab.index_of(t));
    }

    Tensor embeds({tokens.size(), E});
    for (std::size_t i = 0; i < tokens.size(); ++i)
        for (std::size_t j = 0; j < E; ++j) embeds.at(i, j) = table->at(indices[i], j);

    ParseResult parsed =
        parse_sentence(*net, embeds, static_cast<std::size_t>(cfg.max_sentence_len));
    const std::size_t T = parsed.chart.length();

    out << "tokens:";
    for (std::size_t i = 0; i < T; ++i) out << " " << tokens[i];
    out << "\n";
    if (parsed.truncated) out << "note: sentence truncated to " << T << " tokens\n";
    out << "bracketing: " << parsed.chart.bracketing(std::span(tokens).subspan(0, T)) << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", parsed.root_score);
    out << "root_score: " << buf << "\n";
    out << "compositions: " << parsed.chart.compositions() << "\n";
    for (std::size_t width = 2; width <= T; ++width) {
        for (std::size_t i = 0; i + width <= T; ++i) {
            const std::size_t j = i + width - 1;
            std::snprintf(buf, sizeof(buf), "%.6f", parsed.chart.score(i, j));
            out << "span[" << i << "," << j << "] score=" << buf
                << " split=" << parsed.chart.split(i, j) << "\n";
        }
    }
    return out.str();
}

}  // namespace cdln

#include "rvnn.hpp"

#include <cmath>
#include <limits>

#include "log.hpp"

namespace cdln {

CompositionNet::CompositionNet(std::size_t embed_dim, std::size_t hidden, std::uint64_t seed)
    : embed_dim_(embed_dim), hidden_(hidden) {
    if (embed_dim < 1 || hidden < 1)
        fail(errc::config, "composition net: dimensions must be positive");
    Rng rng(derive_seed(seed, "rvnn_init"));
    auto make = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        weights_.emplace_back("rvnn/" + name + "/W", Tensor::uniform({rows, cols}, rng, -0.08, 0.08));
        biases_.emplace_back("rvnn/" + name + "/b", Tensor::uniform({rows}, rng, -0.08, 0.08));
    };
    make("l0", hidden, 2 * embed_dim);
    make("l1", hidden, hidden);
    make("l2", hidden, hidden);
    make("l3", hidden, hidden);
    make("l4", embed_dim, hidden);
    score_vec_ = Parameter("rvnn/score", Tensor::uniform({embed_dim}, rng, -0.08, 0.08));
}

CompositionNet::Composed CompositionNet::compose(const Tensor& left, const Tensor& right) const {
    if (left.rank() != 1 || right.rank() != 1 || left.size() != embed_dim_ ||
        right.size() != embed_dim_)
        fail(errc::contract, "compose: child vectors must have dimension " +
                                 std::to_string(embed_dim_) + ", got " + left.shape_str() + " and " +
                                 right.shape_str());
    // [left; right]
    std::vector<double> buf(2 * embed_dim_);
    std::copy_n(left.data(), embed_dim_, buf.data());
    std::copy_n(right.data(), embed_dim_, buf.data() + embed_dim_);
    Tensor x({2 * embed_dim_}, std::move(buf));

    for (std::size_t layer = 0; layer < weights_.size(); ++layer) {
        const Tensor& W = weights_[layer].value;
        const Tensor& b = biases_[layer].value;
        const std::size_t m = W.dim(0), n = W.dim(1);
        Tensor y({m});
        for (std::size_t i = 0; i < m; ++i) {
            const double* wrow = W.data() + i * n;
            const double* xv = x.data();
            double acc = b[i];
            for (std::size_t j = 0; j < n; ++j) acc += wrow[j] * xv[j];
            y[i] = std::tanh(acc);
        }
        x = std::move(y);
    }

    double s = 0.0;
    for (std::size_t i = 0; i < embed_dim_; ++i) s += score_vec_.value[i] * x[i];
    return Composed{std::move(x), s};
}

CompositionNet::TapeCtx CompositionNet::bind(Tape& tape) {
    TapeCtx ctx;
    for (std::size_t layer = 0; layer < weights_.size(); ++layer) {
        ctx.weights.push_back(tape.param(weights_[layer]));
        ctx.biases.push_back(tape.param(biases_[layer]));
    }
    ctx.score_vec = tape.param(score_vec_);
    return ctx;
}

std::pair<Tape::NodeId, Tape::NodeId> CompositionNet::compose_on_tape(Tape& tape,
                                                                      const TapeCtx& ctx,
                                                                      Tape::NodeId left,
                                                                      Tape::NodeId right) const {
    std::vector<Tape::NodeId> pair{left, right};
    Tape::NodeId x = tape.concat(pair);
    for (std::size_t layer = 0; layer < weights_.size(); ++layer)
        x = tape.activation(Activation::tanh,
                            tape.linear(ctx.weights[layer], x, ctx.biases[layer]));
    Tape::NodeId s = tape.dot(ctx.score_vec, x);
    return {x, s};
}

std::vector<Parameter*> CompositionNet::parameters() {
    std::vector<Parameter*> out;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        out.push_back(&weights_[i]);
        out.push_back(&biases_[i]);
    }
    out.push_back(&score_vec_);
    return out;
}

SpanChart::SpanChart(std::size_t T)
    : T_(T), scores_(T * T, 0.0), vecs_(T * T), splits_(T * T, -1) {}

std::string SpanChart::bracketing(std::span<const std::string> tokens) const {
    std::function<std::string(std::size_t, std::size_t)> render =
        [&](std::size_t i, std::size_t j) -> std::string {
        if (i == j) return i < tokens.size() ? tokens[i] : "?";
        std::size_t k = static_cast<std::size_t>(split(i, j));
        return "(" + render(i, k) + " " + render(k + 1, j) + ")";
    };
    if (T_ == 0) return "";
    return render(0, T_ - 1);
}

ParseResult parse_sentence(const CompositionNet& net, const Tensor& embeddings,
                           std::size_t max_len) {
    if (embeddings.rank() != 2 || embeddings.dim(1) != net.embed_dim())
        fail(errc::contract, "parse_sentence: embeddings must be [T x " +
                                 std::to_string(net.embed_dim()) + "], got " +
                                 embeddings.shape_str());
    std::size_t T = embeddings.dim(0);
    if (T == 0) fail(errc::contract, "parse_sentence: empty sentence");
    if (max_len == 0) fail(errc::contract, "parse_sentence: sentence cap must be positive");

    bool truncated = false;
    if (T > max_len) {
        log_warn("sentence of " + std::to_string(T) + " tokens truncated to " +
                     std::to_string(max_len),
                 "parse_truncate");
        T = max_len;
        truncated = true;
    }

    ParseResult result{SpanChart(T), Tensor{}, 0.0, truncated};
    SpanChart& chart = result.chart;

    const std::size_t E = net.embed_dim();
    for (std::size_t i = 0; i < T; ++i) {
        std::vector<double> row(embeddings.data() + i * E, embeddings.data() + (i + 1) * E);
        chart.vecs_[chart.idx(i, i)] = Tensor({E}, std::move(row));
        chart.scores_[chart.idx(i, i)] = 0.0;
    }

    for (std::size_t width = 2; width <= T; ++width) {
        for (std::size_t i = 0; i + width <= T; ++i) {
            const std::size_t j = i + width - 1;
            double best_score = -std::numeric_limits<double>::infinity();
            Tensor best_vec;
            int best_split = -1;
            for (std::size_t k = i; k < j; ++k) {
                auto composed =
                    net.compose(chart.vecs_[chart.idx(i, k)], chart.vecs_[chart.idx(k + 1, j)]);
                ++chart.compositions_;
                const double cand = chart.scores_[chart.idx(i, k)] +
                                    chart.scores_[chart.idx(k + 1, j)] + composed.s;
                if (cand > best_score) {  // strict: ties keep the smaller split
                    best_score = cand;
                    best_vec = std::move(composed.p);
                    best_split = static_cast<int>(k);
                }
            }
            chart.scores_[chart.idx(i, j)] = best_score;
            chart.vecs_[chart.idx(i, j)] = std::move(best_vec);
            chart.splits_[chart.idx(i, j)] = best_split;
        }
    }

    result.root_vector = chart.vecs_[chart.idx(0, T - 1)];
    result.root_score = chart.scores_[chart.idx(0, T - 1)];
    return result;
}

TreeStructure structure_of(const SpanChart& chart) {
    TreeStructure tree;
    tree.T = chart.length();
    tree.splits.assign(tree.T * tree.T, -1);
    for (std::size_t i = 0; i < tree.T; ++i)
        for (std::size_t j = i + 1; j < tree.T; ++j)
            tree.splits[i * tree.T + j] = chart.split(i, j);
    return tree;
}

namespace {

Tape::NodeId replay_span(CompositionNet& net, Tape& tape, const CompositionNet::TapeCtx& ctx,
                         const TreeStructure& tree, const std::vector<Tape::NodeId>& leaves,
                         std::size_t i, std::size_t j) {
    if (i == j) return leaves[i];
    const int k = tree.splits[i * tree.T + j];
    if (k < 0 || static_cast<std::size_t>(k) < i || static_cast<std::size_t>(k) >= j)
        fail(errc::internal, "replay: invalid split in tree structure");
    Tape::NodeId left = replay_span(net, tape, ctx, tree, leaves, i, static_cast<std::size_t>(k));
    Tape::NodeId right =
        replay_span(net, tape, ctx, tree, leaves, static_cast<std::size_t>(k) + 1, j);
    return net.compose_on_tape(tape, ctx, left, right).first;
}

}  // namespace

Tape::NodeId replay_structure(CompositionNet& net, Tape& tape, const CompositionNet::TapeCtx& ctx,
                              const TreeStructure& tree,
                              const std::vector<Tape::NodeId>& leaves) {
    if (tree.T == 0 || leaves.size() < tree.T)
        fail(errc::contract, "replay: structure and leaves disagree");
    return replay_span(net, tape, ctx, tree, leaves, 0, tree.T - 1);
}

}  // namespace cdln

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "autodiff.hpp"
#include "text.hpp"

namespace cdln {

// Composition network merging two child representations into a parent vector
// plus a structure score: p = tanh-stack([left;right]), s = w_score . p.
// Layer widths: 2E -> H -> H -> H -> H -> E with tanh after every layer.
class CompositionNet {
public:
    CompositionNet(std::size_t embed_dim, std::size_t hidden, std::uint64_t seed);

    std::size_t embed_dim() const { return embed_dim_; }

    struct Composed {
        Tensor p;
        double s = 0.0;
    };

    // Plain numeric composition, used by the chart fill. Accumulation order
    // matches the tape ops exactly so chart values and replayed tape values
    // are bit-identical.
    Composed compose(const Tensor& left, const Tensor& right) const;

    // parameter leaves registered once per tape
    struct TapeCtx {
        std::vector<Tape::NodeId> weights;
        std::vector<Tape::NodeId> biases;
        Tape::NodeId score_vec = -1;
    };
    TapeCtx bind(Tape& tape);

    // composed vector node and score node for one pair of children
    std::pair<Tape::NodeId, Tape::NodeId> compose_on_tape(Tape& tape, const TapeCtx& ctx,
                                                          Tape::NodeId left,
                                                          Tape::NodeId right) const;

    std::vector<Parameter*> parameters();

private:
    std::size_t embed_dim_;
    std::size_t hidden_;
    std::vector<Parameter> weights_;  // 5 layers
    std::vector<Parameter> biases_;
    Parameter score_vec_;
};

class SpanChart;
struct ParseResult;

// Bottom-up chart fill over one sentence's embeddings [T x E]. T = 1 yields
// the lone embedding with score 0. Sentences longer than max_len are
// truncated with a warning.
ParseResult parse_sentence(const CompositionNet& net, const Tensor& embeddings,
                           std::size_t max_len = 60);

// Triangular chart over token spans. A[i,i] = 0 with the token embedding as
// the span vector; wider spans maximize left + right + composition score over
// split points, ties resolved toward the smaller split index.
class SpanChart {
public:
    SpanChart(std::size_t T);

    double score(std::size_t i, std::size_t j) const { return scores_[idx(i, j)]; }
    const Tensor& vec(std::size_t i, std::size_t j) const { return vecs_[idx(i, j)]; }
    int split(std::size_t i, std::size_t j) const { return splits_[idx(i, j)]; }

    std::size_t length() const { return T_; }
    std::uint64_t compositions() const { return compositions_; }

    // the chosen bracketing, e.g. "((the dog) (is here))"
    std::string bracketing(std::span<const std::string> tokens) const;

private:
    friend ParseResult parse_sentence(const CompositionNet& net, const Tensor& embeddings,
                                      std::size_t max_len);
    std::size_t idx(std::size_t i, std::size_t j) const { return i * T_ + j; }

    std::size_t T_;
    std::vector<double> scores_;
    std::vector<Tensor> vecs_;
    std::vector<int> splits_;
    std::uint64_t compositions_ = 0;
};

struct ParseResult {
    SpanChart chart;
    Tensor root_vector;
    double root_score = 0.0;
    bool truncated = false;
};

// argmax tree of a filled chart, for replay with frozen structure
struct TreeStructure {
    std::size_t T = 0;
    std::vector<int> splits;  // row-major [T x T], -1 for leaves/unused
};

TreeStructure structure_of(const SpanChart& chart);

// Rebuild the chosen tree's composition on the tape; leaf i is token i's
// embedding row node. Gradients flow through this replayed tree only; the
// bracketing itself is treated as constant.
Tape::NodeId replay_structure(CompositionNet& net, Tape& tape, const CompositionNet::TapeCtx& ctx,
                              const TreeStructure& tree,
                              const std::vector<Tape::NodeId>& leaves);

}  // namespace cdln

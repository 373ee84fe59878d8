#pragma once

#include <cstdint>
#include <vector>

#include "autodiff.hpp"
#include "config.hpp"
#include "text.hpp"

namespace cdln {

// Idea branch: rounds of (same-padded conv, relu, average pool) over the
// concatenated word embeddings of a whole essay, flattened channel-major at
// the end. Kernels carry no bias terms, so an all-zero signal propagates to
// an exactly zero output.
class CnnBranch {
public:
    CnnBranch(const RunConfig& cfg, std::size_t embed_dim, std::uint64_t seed);

    std::size_t signal_len() const { return signal_len_; }
    // flattened output length; constant across essays for a fixed config
    std::size_t output_dim() const { return output_dim_; }

    struct TapeCtx {
        std::vector<Tape::NodeId> kernels;
    };
    TapeCtx bind(Tape& tape);

    // signal: [1 x signal_len] node; returns the flattened feature node
    Tape::NodeId forward(Tape& tape, const TapeCtx& ctx, Tape::NodeId signal) const;

    std::vector<Parameter*> parameters();

private:
    // pooling is preceded by zero padding of (pool_width - pool_stride) so
    // the length contracts by exactly the stride factor each round
    std::size_t pool_pad_total() const;

    std::size_t conv_width_, pool_width_, channels_, rounds_, conv_stride_, pool_stride_;
    std::size_t signal_len_;
    std::size_t output_dim_ = 0;
    std::vector<std::size_t> round_lengths_;  // length entering each round
    std::vector<Parameter> kernels_;
};

// First min(T, max_tokens) token embeddings concatenated into a single
// [1 x max_tokens*E] channel; the remainder is PAD rows (zeros).
Tape::NodeId essay_signal(Tape& tape, Tape::NodeId table_node, const Vocabulary& vocab,
                          const TokenizedEssay& essay, std::size_t max_tokens,
                          std::size_t embed_dim);

}  // namespace cdln

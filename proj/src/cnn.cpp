#include "cnn.hpp"

namespace cdln {

CnnBranch::CnnBranch(const RunConfig& cfg, std::size_t embed_dim, std::uint64_t seed)
    : conv_width_(static_cast<std::size_t>(cfg.conv_width)),
      pool_width_(static_cast<std::size_t>(cfg.pool_width)),
      channels_(static_cast<std::size_t>(cfg.channels)),
      rounds_(static_cast<std::size_t>(cfg.rounds)),
      conv_stride_(static_cast<std::size_t>(cfg.conv_stride)),
      pool_stride_(static_cast<std::size_t>(cfg.pool_stride)),
      signal_len_(static_cast<std::size_t>(cfg.max_tokens) * embed_dim) {
    // validate that the signal survives every round, and record the lengths
    std::size_t L = signal_len_;
    for (std::size_t r = 0; r < rounds_; ++r) {
        round_lengths_.push_back(L);
        L = (L + conv_stride_ - 1) / conv_stride_;  // same-padded conv
        const std::size_t padded = L + pool_pad_total();
        if (pool_width_ > padded)
            fail(errc::dimension,
                 "idea branch round " + std::to_string(r + 1) + ": signal of length " +
                     std::to_string(L) + " is too short for pooling window " +
                     std::to_string(pool_width_));
        L = (padded - pool_width_) / pool_stride_ + 1;
    }
    output_dim_ = channels_ * L;

    Rng rng(derive_seed(seed, "cnn_init"));
    for (std::size_t r = 0; r < rounds_; ++r) {
        const std::size_t in_ch = r == 0 ? 1 : channels_;
        kernels_.emplace_back("cnn/round" + std::to_string(r) + "/kernel",
                              Tensor::uniform({channels_, in_ch, conv_width_}, rng, -0.08, 0.08));
    }
}

std::size_t CnnBranch::pool_pad_total() const {
    return pool_width_ > pool_stride_ ? pool_width_ - pool_stride_ : 0;
}

CnnBranch::TapeCtx CnnBranch::bind(Tape& tape) {
    TapeCtx ctx;
    for (Parameter& k : kernels_) ctx.kernels.push_back(tape.param(k));
    return ctx;
}

Tape::NodeId CnnBranch::forward(Tape& tape, const TapeCtx& ctx, Tape::NodeId signal) const {
    const Tensor& sig = tape.value(signal);
    if (sig.rank() != 2 || sig.dim(0) != 1 || sig.dim(1) != signal_len_)
        fail(errc::contract, "idea branch: expected signal [1x" + std::to_string(signal_len_) +
                                 "], got " + sig.shape_str());
    Tape::NodeId x = signal;
    const std::size_t pad_total = pool_pad_total();
    for (std::size_t r = 0; r < rounds_; ++r) {
        x = tape.conv1d(x, ctx.kernels[r], conv_stride_, Padding::same);
        x = tape.activation(Activation::relu, x);
        x = tape.pad1d(x, pad_total / 2, pad_total - pad_total / 2);
        x = tape.avgpool1d(x, pool_width_, pool_stride_);
    }
    Tape::NodeId flat = tape.flatten(x);
    if (tape.value(flat).size() != output_dim_)
        fail(errc::internal, "idea branch: output length drifted from plan");
    return flat;
}

std::vector<Parameter*> CnnBranch::parameters() {
    std::vector<Parameter*> out;
    for (Parameter& k : kernels_) out.push_back(&k);
    return out;
}

Tape::NodeId essay_signal(Tape& tape, Tape::NodeId table_node, const Vocabulary& vocab,
                          const TokenizedEssay& essay, std::size_t max_tokens,
                          std::size_t embed_dim) {
    if (essay.tokens.empty()) fail(errc::contract, "essay signal: empty essay");
    std::vector<std::size_t> indices;
    indices.reserve(max_tokens);
    for (std::size_t i = 0; i < essay.tokens.size() && i < max_tokens; ++i)
        indices.push_back(vocab.index_of(essay.tokens[i]));
    while (indices.size() < max_tokens) indices.push_back(Vocabulary::kPad);
    Tape::NodeId gathered = tape.rows(table_node, std::move(indices));
    (void)embed_dim;
    return tape.as_channels(tape.flatten(gathered), 1);
}

}  // namespace cdln

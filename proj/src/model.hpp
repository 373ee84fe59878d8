#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "autodiff.hpp"
#include "cnn.hpp"
#include "config.hpp"
#include "rvnn.hpp"
#include "text.hpp"

namespace cdln {

// Standard LSTM cell over frames, zero initial hidden/cell state.
class LstmCell {
public:
    LstmCell(const std::string& prefix, std::size_t input_dim, std::size_t hidden,
             std::uint64_t seed);

    std::size_t hidden() const { return hidden_; }
    std::size_t input_dim() const { return input_dim_; }

    struct TapeCtx {
        std::vector<Tape::NodeId> gate_w;  // input, forget, output, candidate
        std::vector<Tape::NodeId> gate_b;
    };
    TapeCtx bind(Tape& tape);

    // final hidden state after consuming all frames
    Tape::NodeId run(Tape& tape, const TapeCtx& ctx, std::span<const Tape::NodeId> frames) const;

    std::vector<Parameter*> parameters();

private:
    std::size_t input_dim_;
    std::size_t hidden_;
    std::vector<Parameter> gate_w_;
    std::vector<Parameter> gate_b_;
};

// Five relu hidden layers with dropout, then a single sigmoid output cell.
class DenseHead {
public:
    DenseHead(const std::string& prefix, std::size_t input_dim, std::size_t width,
              std::uint64_t seed);

    struct TapeCtx {
        std::vector<Tape::NodeId> w;
        std::vector<Tape::NodeId> b;
    };
    TapeCtx bind(Tape& tape);

    Tape::NodeId forward(Tape& tape, const TapeCtx& ctx, Tape::NodeId h, bool training,
                         double dropout_rate, std::uint64_t dropout_seed) const;

    std::vector<Parameter*> parameters();

    static constexpr std::size_t kHiddenLayers = 5;

private:
    std::vector<Parameter> w_;
    std::vector<Parameter> b_;
};

// Concatenate the idea-branch features and the structural vector, zero-pad to
// a multiple of the frame width, and slice into consecutive frames.
std::vector<Tape::NodeId> fuse_vectors(Tape& tape, Tape::NodeId cnn_out, Tape::NodeId rvnn_out,
                                       std::size_t frame_width);

// Common surface for every gradient-trained grader.
class NeuralGrader {
public:
    virtual ~NeuralGrader() = default;

    virtual std::string kind() const = 0;
    // scalar prediction node in (0,1)
    virtual Tape::NodeId forward(Tape& tape, const TokenizedEssay& essay, bool training,
                                 std::uint64_t dropout_seed) = 0;
    virtual std::vector<Parameter*> parameters() = 0;
    virtual EmbeddingTable& table() = 0;
    virtual const Vocabulary& vocab() const = 0;

    double predict(const TokenizedEssay& essay) {
        Tape tape;
        Tape::NodeId out = forward(tape, essay, false, 0);
        return tape.value(out)[0];
    }
};

// frozen per-sentence bracketings, for gradient checks on a fixed structure
struct FrozenParse {
    std::vector<TreeStructure> sentences;
};

// The full collaborative network: structural branch summed over sentences,
// idea branch over the whole essay, fused into frames for the LSTM, graded by
// the dense head.
class CdlnModel : public NeuralGrader {
public:
    CdlnModel(const RunConfig& cfg, Vocabulary vocab);

    std::string kind() const override { return "cdln"; }
    Tape::NodeId forward(Tape& tape, const TokenizedEssay& essay, bool training,
                         std::uint64_t dropout_seed) override {
        return forward_impl(tape, essay, training, dropout_seed, nullptr);
    }
    // same forward with every sentence's bracketing pinned
    Tape::NodeId forward_frozen(Tape& tape, const TokenizedEssay& essay,
                                const FrozenParse& frozen) {
        return forward_impl(tape, essay, false, 0, &frozen);
    }

    FrozenParse parse_structures(const TokenizedEssay& essay) const;

    // structural vector node: sum of per-sentence root vectors
    Tape::NodeId struct_vector(Tape& tape, const CompositionNet::TapeCtx& rvnn_ctx,
                               Tape::NodeId table_node, const TokenizedEssay& essay,
                               const FrozenParse* frozen);

    std::vector<Parameter*> parameters() override;
    EmbeddingTable& table() override { return table_; }
    const Vocabulary& vocab() const override { return vocab_; }

    CompositionNet& composition() { return rvnn_; }
    CnnBranch& idea_branch() { return cnn_; }
    std::size_t max_sentence_len() const { return max_sentence_len_; }

private:
    Tape::NodeId forward_impl(Tape& tape, const TokenizedEssay& essay, bool training,
                              std::uint64_t dropout_seed, const FrozenParse* frozen);
    TreeStructure parse_one(const TokenizedEssay& essay, std::size_t sentence) const;

    Vocabulary vocab_;
    EmbeddingTable table_;
    CompositionNet rvnn_;
    CnnBranch cnn_;
    LstmCell lstm_;
    DenseHead head_;
    std::size_t max_tokens_;
    std::size_t max_sentence_len_;
    std::size_t embed_dim_;
    double dropout_rate_;
};

}  // namespace cdln

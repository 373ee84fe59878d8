#pragma once

#include <cstdint>
#include <memory>

#include "model.hpp"

namespace cdln {

// Plain recurrent baseline: a_t = tanh(W_aa a_{t-1} + W_ax x_t + b_a) over
// token embeddings, then a sigmoid scalar head y = sigmoid(W_ya a_T + b_y).
class SimpleRnnModel : public NeuralGrader {
public:
    SimpleRnnModel(const RunConfig& cfg, Vocabulary vocab);

    std::string kind() const override { return "rnn"; }
    Tape::NodeId forward(Tape& tape, const TokenizedEssay& essay, bool training,
                         std::uint64_t dropout_seed) override;
    std::vector<Parameter*> parameters() override;
    EmbeddingTable& table() override { return table_; }
    const Vocabulary& vocab() const override { return vocab_; }

private:
    Vocabulary vocab_;
    EmbeddingTable table_;
    std::size_t hidden_;
    std::size_t max_tokens_;
    Parameter w_aa_, w_ax_, b_a_, w_ya_, b_y_;
};

// Bag-of-embeddings baseline: mean token embedding through two relu layers
// and a sigmoid scalar.
class AnnModel : public NeuralGrader {
public:
    AnnModel(const RunConfig& cfg, Vocabulary vocab);

    std::string kind() const override { return "ann"; }
    Tape::NodeId forward(Tape& tape, const TokenizedEssay& essay, bool training,
                         std::uint64_t dropout_seed) override;
    std::vector<Parameter*> parameters() override;
    EmbeddingTable& table() override { return table_; }
    const Vocabulary& vocab() const override { return vocab_; }

private:
    Vocabulary vocab_;
    EmbeddingTable table_;
    std::size_t max_tokens_;
    Parameter w1_, b1_, w2_, b2_, w_out_, b_out_;
};

// Single-LSTM baseline over the token embedding sequence.
class LstmBaselineModel : public NeuralGrader {
public:
    LstmBaselineModel(const RunConfig& cfg, Vocabulary vocab);

    std::string kind() const override { return "lstm"; }
    Tape::NodeId forward(Tape& tape, const TokenizedEssay& essay, bool training,
                         std::uint64_t dropout_seed) override;
    std::vector<Parameter*> parameters() override;
    EmbeddingTable& table() override { return table_; }
    const Vocabulary& vocab() const override { return vocab_; }

private:
    Vocabulary vocab_;
    EmbeddingTable table_;
    std::size_t max_tokens_;
    LstmCell cell_;
    Parameter w_out_, b_out_;
};

// kind in {cdln, rnn, ann, lstm}
std::unique_ptr<NeuralGrader> make_neural_grader(const std::string& kind, const RunConfig& cfg,
                                                 Vocabulary vocab);

}  // namespace cdln

#include "baselines.hpp"

namespace cdln {

namespace {

// token rows gathered for the first min(T, cap) tokens
Tape::NodeId gather_tokens(Tape& tape, Tape::NodeId table_node, const Vocabulary& vocab,
                           const TokenizedEssay& essay, std::size_t cap) {
    if (essay.tokens.empty()) fail(errc::contract, "baseline: empty essay");
    std::vector<std::size_t> indices;
    for (std::size_t i = 0; i < essay.tokens.size() && i < cap; ++i)
        indices.push_back(vocab.index_of(essay.tokens[i]));
    return tape.rows(table_node, std::move(indices));
}

std::vector<Tape::NodeId> frame_nodes(Tape& tape, Tape::NodeId gathered, std::size_t embed_dim) {
    const std::size_t T = tape.value(gathered).dim(0);
    Tape::NodeId flat = tape.flatten(gathered);
    std::vector<Tape::NodeId> frames;
    frames.reserve(T);
    for (std::size_t i = 0; i < T; ++i)
        frames.push_back(tape.slice(flat, i * embed_dim, embed_dim));
    return frames;
}

}  // namespace

SimpleRnnModel::SimpleRnnModel(const RunConfig& cfg, Vocabulary vocab)
    : vocab_(std::move(vocab)),
      table_(vocab_.size(), static_cast<std::size_t>(cfg.embedding_dim), cfg.seed),
      hidden_(static_cast<std::size_t>(cfg.rnn_hidden)),
      max_tokens_(static_cast<std::size_t>(cfg.max_tokens)) {
    Rng rng(derive_seed(cfg.seed, "rnn_init"));
    const std::size_t E = static_cast<std::size_t>(cfg.embedding_dim);
    w_aa_ = Parameter("rnn/W_aa", Tensor::uniform({hidden_, hidden_}, rng, -0.08, 0.08));
    w_ax_ = Parameter("rnn/W_ax", Tensor::uniform({hidden_, E}, rng, -0.08, 0.08));
    b_a_ = Parameter("rnn/b_a", Tensor::uniform({hidden_}, rng, -0.08, 0.08));
    w_ya_ = Parameter("rnn/W_ya", Tensor::uniform({1, hidden_}, rng, -0.08, 0.08));
    b_y_ = Parameter("rnn/b_y", Tensor::uniform({1}, rng, -0.08, 0.08));
    if (!cfg.embeddings_file.empty()) table_.load_pretrained(cfg.embeddings_file, vocab_);
}

Tape::NodeId SimpleRnnModel::forward(Tape& tape, const TokenizedEssay& essay, bool, std::uint64_t) {
    Tape::NodeId table_node = tape.param(table_.weights());
    Tape::NodeId gathered =
        gather_tokens(tape, table_node, vocab_, essay, max_tokens_);
    std::vector<Tape::NodeId> frames = frame_nodes(tape, gathered, table_.dim());

    Tape::NodeId w_aa = tape.param(w_aa_);
    Tape::NodeId w_ax = tape.param(w_ax_);
    Tape::NodeId b_a = tape.param(b_a_);
    Tape::NodeId zero_h = tape.constant(Tensor::zeros({hidden_}));

    Tape::NodeId a = zero_h;
    for (Tape::NodeId x : frames) {
        Tape::NodeId from_h = tape.linear(w_aa, a, b_a);            // W_aa a + b_a
        Tape::NodeId from_x = tape.linear(w_ax, x, zero_h);         // W_ax x
        a = tape.activation(Activation::tanh, tape.add(from_h, from_x));
    }
    return tape.activation(Activation::sigmoid,
                           tape.linear(tape.param(w_ya_), a, tape.param(b_y_)));
}

std::vector<Parameter*> SimpleRnnModel::parameters() {
    return {&table_.weights(), &w_aa_, &w_ax_, &b_a_, &w_ya_, &b_y_};
}

AnnModel::AnnModel(const RunConfig& cfg, Vocabulary vocab)
    : vocab_(std::move(vocab)),
      table_(vocab_.size(), static_cast<std::size_t>(cfg.embedding_dim), cfg.seed),
      max_tokens_(static_cast<std::size_t>(cfg.max_tokens)) {
    Rng rng(derive_seed(cfg.seed, "ann_init"));
    const std::size_t E = static_cast<std::size_t>(cfg.embedding_dim);
    const std::size_t H = static_cast<std::size_t>(cfg.ann_hidden);
    w1_ = Parameter("ann/h0/W", Tensor::uniform({H, E}, rng, -0.08, 0.08));
    b1_ = Parameter("ann/h0/b", Tensor::uniform({H}, rng, -0.08, 0.08));
    w2_ = Parameter("ann/h1/W", Tensor::uniform({H, H}, rng, -0.08, 0.08));
    b2_ = Parameter("ann/h1/b", Tensor::uniform({H}, rng, -0.08, 0.08));
    w_out_ = Parameter("ann/out/W", Tensor::uniform({1, H}, rng, -0.08, 0.08));
    b_out_ = Parameter("ann/out/b", Tensor::uniform({1}, rng, -0.08, 0.08));
    if (!cfg.embeddings_file.empty()) table_.load_pretrained(cfg.embeddings_file, vocab_);
}

Tape::NodeId AnnModel::forward(Tape& tape, const TokenizedEssay& essay, bool, std::uint64_t) {
    Tape::NodeId table_node = tape.param(table_.weights());
    Tape::NodeId gathered = gather_tokens(tape, table_node, vocab_, essay, max_tokens_);
    Tape::NodeId mean = tape.mean_rows(gathered);
    Tape::NodeId h1 =
        tape.activation(Activation::relu, tape.linear(tape.param(w1_), mean, tape.param(b1_)));
    Tape::NodeId h2 =
        tape.activation(Activation::relu, tape.linear(tape.param(w2_), h1, tape.param(b2_)));
    return tape.activation(Activation::sigmoid,
                           tape.linear(tape.param(w_out_), h2, tape.param(b_out_)));
}

std::vector<Parameter*> AnnModel::parameters() {
    return {&table_.weights(), &w1_, &b1_, &w2_, &b2_, &w_out_, &b_out_};
}

LstmBaselineModel::LstmBaselineModel(const RunConfig& cfg, Vocabulary vocab)
    : vocab_(std::move(vocab)),
      table_(vocab_.size(), static_cast<std::size_t>(cfg.embedding_dim), cfg.seed),
      max_tokens_(static_cast<std::size_t>(cfg.max_tokens)),
      cell_("lstm_base", static_cast<std::size_t>(cfg.embedding_dim),
            static_cast<std::size_t>(cfg.lstm_baseline_hidden), cfg.seed) {
    Rng rng(derive_seed(cfg.seed, "lstm_base_init"));
    w_out_ = Parameter("lstm_base/out/W",
                       Tensor::uniform({1, cell_.hidden()}, rng, -0.08, 0.08));
    b_out_ = Parameter("lstm_base/out/b", Tensor::uniform({1}, rng, -0.08, 0.08));
    if (!cfg.embeddings_file.empty()) table_.load_pretrained(cfg.embeddings_file, vocab_);
}

Tape::NodeId LstmBaselineModel::forward(Tape& tape, const TokenizedEssay& essay, bool,
                                        std::uint64_t) {
    Tape::NodeId table_node = tape.param(table_.weights());
    Tape::NodeId gathered = gather_tokens(tape, table_node, vocab_, essay, max_tokens_);
    std::vector<Tape::NodeId> frames = frame_nodes(tape, gathered, table_.dim());
    LstmCell::TapeCtx ctx = cell_.bind(tape);
    Tape::NodeId h = cell_.run(tape, ctx, frames);
    return tape.activation(Activation::sigmoid,
                           tape.linear(tape.param(w_out_), h, tape.param(b_out_)));
}

std::vector<Parameter*> LstmBaselineModel::parameters() {
    std::vector<Parameter*> out{&table_.weights()};
    for (Parameter* p : cell_.parameters()) out.push_back(p);
    out.push_back(&w_out_);
    out.push_back(&b_out_);
    return out;
}

std::unique_ptr<NeuralGrader> make_neural_grader(const std::string& kind, const RunConfig& cfg,
                                                 Vocabulary vocab) {
    if (kind == "cdln") return std::make_unique<CdlnModel>(cfg, std::move(vocab));
    if (kind == "rnn") return std::make_unique<SimpleRnnModel>(cfg, std::move(vocab));
    if (kind == "ann") return std::make_unique<AnnModel>(cfg, std::move(vocab));
    if (kind == "lstm") return std::make_unique<LstmBaselineModel>(cfg, std::move(vocab));
    fail(errc::config, "unknown neural model kind: '" + kind + "'");
}

}  // namespace cdln

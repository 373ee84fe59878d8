#include "model.hpp"

namespace cdln {

LstmCell::LstmCell(const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                   std::uint64_t seed)
    : input_dim_(input_dim), hidden_(hidden) {
    Rng rng(derive_seed(seed, prefix + "_init"));
    static const char* gate_names[4] = {"input", "forget", "output", "candidate"};
    for (const char* g : gate_names) {
        gate_w_.emplace_back(prefix + "/" + g + "/W",
                             Tensor::uniform({hidden, input_dim + hidden}, rng, -0.08, 0.08));
        gate_b_.emplace_back(prefix + "/" + g + "/b", Tensor::uniform({hidden}, rng, -0.08, 0.08));
    }
}

LstmCell::TapeCtx LstmCell::bind(Tape& tape) {
    TapeCtx ctx;
    for (std::size_t g = 0; g < 4; ++g) {
        ctx.gate_w.push_back(tape.param(gate_w_[g]));
        ctx.gate_b.push_back(tape.param(gate_b_[g]));
    }
    return ctx;
}

Tape::NodeId LstmCell::run(Tape& tape, const TapeCtx& ctx,
                           std::span<const Tape::NodeId> frames) const {
    if (frames.empty()) fail(errc::contract, "lstm: empty frame sequence");
    Tape::NodeId h = tape.constant(Tensor::zeros({hidden_}));
    Tape::NodeId c = tape.constant(Tensor::zeros({hidden_}));
    for (Tape::NodeId x : frames) {
        if (tape.value(x).size() != input_dim_)
            fail(errc::contract, "lstm: frame width " + std::to_string(tape.value(x).size()) +
                                     " does not match input dimension " +
                                     std::to_string(input_dim_));
        std::vector<Tape::NodeId> xh{x, h};
        Tape::NodeId z = tape.concat(xh);
        Tape::NodeId gi =
            tape.activation(Activation::sigmoid, tape.linear(ctx.gate_w[0], z, ctx.gate_b[0]));
        Tape::NodeId gf =
            tape.activation(Activation::sigmoid, tape.linear(ctx.gate_w[1], z, ctx.gate_b[1]));
        Tape::NodeId go =
            tape.activation(Activation::sigmoid, tape.linear(ctx.gate_w[2], z, ctx.gate_b[2]));
        Tape::NodeId gc =
            tape.activation(Activation::tanh, tape.linear(ctx.gate_w[3], z, ctx.gate_b[3]));
        c = tape.add(tape.mul(gf, c), tape.mul(gi, gc));
        h = tape.mul(go, tape.activation(Activation::tanh, c));
    }
    return h;
}

std::vector<Parameter*> LstmCell::parameters() {
    std::vector<Parameter*> out;
    for (std::size_t g = 0; g < 4; ++g) {
        out.push_back(&gate_w_[g]);
        out.push_back(&gate_b_[g]);
    }
    return out;
}

DenseHead::DenseHead(const std::string& prefix, std::size_t input_dim, std::size_t width,
                     std::uint64_t seed) {
    Rng rng(derive_seed(seed, prefix + "_init"));
    std::size_t in = input_dim;
    for (std::size_t layer = 0; layer < kHiddenLayers; ++layer) {
        w_.emplace_back(prefix + "/h" + std::to_string(layer) + "/W",
                        Tensor::uniform({width, in}, rng, -0.08, 0.08));
        b_.emplace_back(prefix + "/h" + std::to_string(layer) + "/b",
                        Tensor::uniform({width}, rng, -0.08, 0.08));
        in = width;
    }
    w_.emplace_back(prefix + "/out/W", Tensor::uniform({1, in}, rng, -0.08, 0.08));
    b_.emplace_back(prefix + "/out/b", Tensor::uniform({1}, rng, -0.08, 0.08));
}

DenseHead::TapeCtx DenseHead::bind(Tape& tape) {
    TapeCtx ctx;
    for (std::size_t i = 0; i < w_.size(); ++i) {
        ctx.w.push_back(tape.param(w_[i]));
        ctx.b.push_back(tape.param(b_[i]));
    }
    return ctx;
}

Tape::NodeId DenseHead::forward(Tape& tape, const TapeCtx& ctx, Tape::NodeId h, bool training,
                                double dropout_rate, std::uint64_t dropout_seed) const {
    Tape::NodeId x = h;
    for (std::size_t layer = 0; layer < kHiddenLayers; ++layer) {
        x = tape.activation(Activation::relu, tape.linear(ctx.w[layer], x, ctx.b[layer]));
        x = tape.dropout(x, dropout_rate, training, derive_seed(dropout_seed, layer));
    }
    return tape.activation(Activation::sigmoid,
                           tape.linear(ctx.w[kHiddenLayers], x, ctx.b[kHiddenLayers]));
}

std::vector<Parameter*> DenseHead::parameters() {
    std::vector<Parameter*> out;
    for (std::size_t i = 0; i < w_.size(); ++i) {
        out.push_back(&w_[i]);
        out.push_back(&b_[i]);
    }
    return out;
}

std::vector<Tape::NodeId> fuse_vectors(Tape& tape, Tape::NodeId cnn_out, Tape::NodeId rvnn_out,
                                       std::size_t frame_width) {
    if (frame_width == 0) fail(errc::contract, "fuse: frame width must be positive");
    std::vector<Tape::NodeId> parts{cnn_out, rvnn_out};
    const std::size_t joined = tape.value(cnn_out).size() + tape.value(rvnn_out).size();
    const std::size_t remainder = joined % frame_width;
    if (remainder != 0)
        parts.push_back(tape.constant(Tensor::zeros({frame_width - remainder})));
    Tape::NodeId fused = tape.concat(parts);

    const std::size_t n_frames = tape.value(fused).size() / frame_width;
    std::vector<Tape::NodeId> frames;
    frames.reserve(n_frames);
    for (std::size_t f = 0; f < n_frames; ++f)
        frames.push_back(tape.slice(fused, f * frame_width, frame_width));
    return frames;
}

CdlnModel::CdlnModel(const RunConfig& cfg, Vocabulary vocab)
    : vocab_(std::move(vocab)),
      table_(vocab_.size(), static_cast<std::size_t>(cfg.embedding_dim), cfg.seed),
      rvnn_(static_cast<std::size_t>(cfg.embedding_dim),
            static_cast<std::size_t>(cfg.rvnn_hidden), cfg.seed),
      cnn_(cfg, static_cast<std::size_t>(cfg.embedding_dim), cfg.seed),
      lstm_("lstm", static_cast<std::size_t>(cfg.embedding_dim),
            static_cast<std::size_t>(cfg.lstm_hidden), cfg.seed),
      head_("head", static_cast<std::size_t>(cfg.lstm_hidden),
            static_cast<std::size_t>(cfg.dense_width), cfg.seed),
      max_tokens_(static_cast<std::size_t>(cfg.max_tokens)),
      max_sentence_len_(static_cast<std::size_t>(cfg.max_sentence_len)),
      embed_dim_(static_cast<std::size_t>(cfg.embedding_dim)),
      dropout_rate_(cfg.dropout_rate) {
    if (!cfg.embeddings_file.empty()) table_.load_pretrained(cfg.embeddings_file, vocab_);
}

TreeStructure CdlnModel::parse_one(const TokenizedEssay& essay, std::size_t sentence) const {
    const auto [begin, end] = essay.sentences[sentence];
    const std::size_t T = end - begin;
    const std::size_t E = embed_dim_;
    Tensor embeds({T, E});
    for (std::size_t i = 0; i < T; ++i) {
        const std::size_t row = vocab_.index_of(essay.tokens[begin + i]);
        for (std::size_t j = 0; j < E; ++j) embeds.at(i, j) = table_.weights().value.at(row, j);
    }
    ParseResult parsed = parse_sentence(rvnn_, embeds, max_sentence_len_);
    return structure_of(parsed.chart);
}

FrozenParse CdlnModel::parse_structures(const TokenizedEssay& essay) const {
    FrozenParse frozen;
    for (std::size_t s = 0; s < essay.sentences.size(); ++s)
        frozen.sentences.push_back(parse_one(essay, s));
    return frozen;
}

Tape::NodeId CdlnModel::struct_vector(Tape& tape, const CompositionNet::TapeCtx& rvnn_ctx,
                                      Tape::NodeId table_node, const TokenizedEssay& essay,
                                      const FrozenParse* frozen) {
    if (essay.sentences.empty()) fail(errc::contract, "structural branch: essay has no sentences");
    if (frozen && frozen->sentences.size() != essay.sentences.size())
        fail(errc::contract, "structural branch: frozen parse does not match essay");

    Tape::NodeId total = -1;
    for (std::size_t s = 0; s < essay.sentences.size(); ++s) {
        const std::size_t begin = essay.sentences[s].first;
        TreeStructure tree = frozen ? frozen->sentences[s] : parse_one(essay, s);
        const std::size_t T = tree.T;  // truncation-capped length

        std::vector<std::size_t> indices;
        indices.reserve(T);
        for (std::size_t i = 0; i < T; ++i)
            indices.push_back(vocab_.index_of(essay.tokens[begin + i]));
        Tape::NodeId gathered = tape.rows(table_node, std::move(indices));
        Tape::NodeId flat = tape.flatten(gathered);
        std::vector<Tape::NodeId> leaves;
        leaves.reserve(T);
        for (std::size_t i = 0; i < T; ++i)
            leaves.push_back(tape.slice(flat, i * embed_dim_, embed_dim_));

        Tape::NodeId root = replay_structure(rvnn_, tape, rvnn_ctx, tree, leaves);
        total = (total < 0) ? root : tape.add(total, root);
    }
    return total;
}

Tape::NodeId CdlnModel::forward_impl(Tape& tape, const TokenizedEssay& essay, bool training,
                                     std::uint64_t dropout_seed, const FrozenParse* frozen) {
    if (essay.tokens.empty()) fail(errc::contract, "cdln: empty essay");

    Tape::NodeId table_node = tape.param(table_.weights());

    CnnBranch::TapeCtx cnn_ctx = cnn_.bind(tape);
    Tape::NodeId signal = essay_signal(tape, table_node, vocab_, essay, max_tokens_, embed_dim_);
    Tape::NodeId cnn_flat = cnn_.forward(tape, cnn_ctx, signal);

    CompositionNet::TapeCtx rvnn_ctx = rvnn_.bind(tape);
    Tape::NodeId struct_vec = struct_vector(tape, rvnn_ctx, table_node, essay, frozen);

    std::vector<Tape::NodeId> frames = fuse_vectors(tape, cnn_flat, struct_vec, embed_dim_);

    LstmCell::TapeCtx lstm_ctx = lstm_.bind(tape);
    Tape::NodeId h = lstm_.run(tape, lstm_ctx, frames);

    DenseHead::TapeCtx head_ctx = head_.bind(tape);
    return head_.forward(tape, head_ctx, h, training, dropout_rate_, dropout_seed);
}

std::vector<Parameter*> CdlnModel::parameters() {
    std::vector<Parameter*> out{&table_.weights()};
    for (Parameter* p : rvnn_.parameters()) out.push_back(p);
    for (Parameter* p : cnn_.parameters()) out.push_back(p);
    for (Parameter* p : lstm_.parameters()) out.push_back(p);
    for (Parameter* p : head_.parameters()) out.push_back(p);
    return out;
}

}  // namespace cdln

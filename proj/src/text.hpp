#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "autodiff.hpp"

namespace cdln {

struct TokenizedEssay {
    std::vector<std::string> tokens;
    // [begin,end) token ranges; disjoint, ordered, covering all tokens
    std::vector<std::pair<std::size_t, std::size_t>> sentences;
};

// Lowercased whitespace tokenization with punctuation split into standalone
// tokens. Total: never throws, empty text gives an empty sequence.
std::vector<std::string> tokenize(const std::string& text);

// Sentence boundaries after '.', '!' and '?'; trailing tokens form a final
// sentence. Never emits an empty sentence.
std::vector<std::pair<std::size_t, std::size_t>> split_sentences(
    const std::vector<std::string>& tokens);

TokenizedEssay tokenize_essay(const std::string& text);

class Vocabulary {
public:
    static constexpr std::size_t kUnk = 0;
    static constexpr std::size_t kPad = 1;

    // Tokens with count >= min_count, indexed from 2 by descending count and
    // then lexicographic order.
    static Vocabulary build(const std::vector<TokenizedEssay>& corpus, std::size_t min_count = 2);

    // Rebuild from an ordered token list (checkpoint load).
    static Vocabulary from_ordered_tokens(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    std::size_t index_of(const std::string& token) const;
    const std::vector<std::string>& tokens() const { return tokens_; }
    std::vector<std::size_t> encode(std::span<const std::string> tokens) const;

private:
    std::vector<std::string> tokens_;  // index -> token, [0]=<unk>, [1]=<pad>
    std::unordered_map<std::string, std::size_t> index_;
};

// Trainable [V x dim] embedding matrix. The PAD row is zero and stays frozen:
// its gradient is cleared before every optimizer step.
class EmbeddingTable {
public:
    EmbeddingTable(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

    Parameter& weights() { return weights_; }
    const Parameter& weights() const { return weights_; }
    std::size_t dim() const { return dim_; }
    std::size_t vocab_size() const { return weights_.value.dim(0); }

    void mask_pad_gradient() {
        for (std::size_t j = 0; j < dim_; ++j) weights_.grad.at(Vocabulary::kPad, j) = 0.0;
    }

    // Optional text-format vectors: one token followed by `dim` reals per
    // line. Tokens absent from the vocabulary are ignored.
    void load_pretrained(const std::string& path, const Vocabulary& vocab);

private:
    std::size_t dim_;
    Parameter weights_;
};

struct TfidfModel {
    std::unordered_map<std::string, std::size_t> df;
    std::size_t corpus_size = 0;
    // deterministic token order for persistence and feature indexing
    std::vector<std::string> ordered_tokens;
};

// l2-normalized sparse vector keyed by token, entries sorted by key
struct SparseVec {
    std::vector<std::pair<std::string, double>> entries;

    double dot(const SparseVec& other) const;
    double squared_norm() const;
};

TfidfModel tfidf_fit(const std::vector<TokenizedEssay>& corpus);

// tf = raw count; idf(w) = ln((1+n)/(1+df(w))) + 1 with df = 0 for unseen
// words; result scaled to unit l2 norm (zero vector stays zero).
SparseVec tfidf_transform(const TfidfModel& model, const TokenizedEssay& essay);

double tfidf_idf(const TfidfModel& model, const std::string& token);

}  // namespace cdln

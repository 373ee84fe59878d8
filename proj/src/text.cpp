#include "text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace cdln {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (unsigned char c : text) {
        if (c < 0x80 && std::isspace(c)) {
            flush();
        } else if (c < 0x80 && std::ispunct(c)) {
            flush();
            tokens.emplace_back(1, static_cast<char>(c));
        } else if (c < 0x80) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else {
            current.push_back(static_cast<char>(c));  // non-ASCII bytes pass through
        }
    }
    flush();
    return tokens;
}

std::vector<std::pair<std::size_t, std::size_t>> split_sentences(
    const std::vector<std::string>& tokens) {
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& t = tokens[i];
        if (t == "." || t == "!" || t == "?") {
            ranges.emplace_back(begin, i + 1);
            begin = i + 1;
        }
    }
    if (begin < tokens.size()) ranges.emplace_back(begin, tokens.size());
    return ranges;
}

TokenizedEssay tokenize_essay(const std::string& text) {
    TokenizedEssay out;
    out.tokens = tokenize(text);
    out.sentences = split_sentences(out.tokens);
    return out;
}

Vocabulary Vocabulary::build(const std::vector<TokenizedEssay>& corpus, std::size_t min_count) {
    if (corpus.empty()) fail(errc::data, "vocabulary: empty corpus");
    if (min_count < 1) fail(errc::contract, "vocabulary: min_count must be >= 1");
    std::map<std::string, std::size_t> counts;
    for (const TokenizedEssay& essay : corpus)
        for (const std::string& tok : essay.tokens) ++counts[tok];

    std::vector<std::pair<std::string, std::size_t>> kept;
    for (auto& [tok, count] : counts)
        if (count >= min_count) kept.emplace_back(tok, count);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::vector<std::string> ordered;
    ordered.reserve(kept.size());
    for (auto& [tok, count] : kept) ordered.push_back(tok);
    return from_ordered_tokens(std::move(ordered));
}

Vocabulary Vocabulary::from_ordered_tokens(std::vector<std::string> tokens) {
    Vocabulary v;
    v.tokens_.reserve(tokens.size() + 2);
    v.tokens_.push_back("<unk>");
    v.tokens_.push_back("<pad>");
    for (std::string& t : tokens) v.tokens_.push_back(std::move(t));
    for (std::size_t i = 2; i < v.tokens_.size(); ++i) v.index_[v.tokens_[i]] = i;
    return v;
}

std::size_t Vocabulary::index_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocabulary::encode(std::span<const std::string> tokens) const {
    std::vector<std::size_t> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(index_of(t));
    return out;
}

EmbeddingTable::EmbeddingTable(std::size_t vocab_size, std::size_t dim, std::uint64_t seed)
    : dim_(dim) {
    if (vocab_size < 2) fail(errc::contract, "embedding table needs at least the UNK/PAD rows");
    Rng rng(derive_seed(seed, "embedding_init"));
    Tensor w = Tensor::uniform({vocab_size, dim}, rng, -0.08, 0.08);
    for (std::size_t j = 0; j < dim; ++j) w.at(Vocabulary::kPad, j) = 0.0;
    weights_ = Parameter("embed/table", std::move(w));
}

void EmbeddingTable::load_pretrained(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open embedding file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string token;
        ss >> token;
        std::size_t row = vocab.index_of(token);
        std::vector<double> values;
        values.reserve(dim_);
        double v;
        while (ss >> v) values.push_back(v);
        if (values.size() != dim_)
            fail(errc::format, path + ":" + std::to_string(line_no) + ": expected " +
                                   std::to_string(dim_) + " values, got " +
                                   std::to_string(values.size()));
        if (row == Vocabulary::kUnk && token != "<unk>") continue;  // out-of-vocabulary line
        for (std::size_t j = 0; j < dim_; ++j) weights_.value.at(row, j) = values[j];
    }
    for (std::size_t j = 0; j < dim_; ++j) weights_.value.at(Vocabulary::kPad, j) = 0.0;
}

TfidfModel tfidf_fit(const std::vector<TokenizedEssay>& corpus) {
    if (corpus.empty()) fail(errc::data, "tfidf: empty corpus");
    TfidfModel model;
    model.corpus_size = corpus.size();
    std::map<std::string, std::size_t> df;
    for (const TokenizedEssay& essay : corpus) {
        std::vector<std::string> seen(essay.tokens);
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (const std::string& tok : seen) ++df[tok];
    }
    for (auto& [tok, count] : df) {
        model.df.emplace(tok, count);
        model.ordered_tokens.push_back(tok);
    }
    return model;
}

double tfidf_idf(const TfidfModel& model, const std::string& token) {
    auto it = model.df.find(token);
    const double df = it == model.df.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((1.0 + static_cast<double>(model.corpus_size)) / (1.0 + df)) + 1.0;
}

SparseVec tfidf_transform(const TfidfModel& model, const TokenizedEssay& essay) {
    if (model.corpus_size == 0) fail(errc::contract, "tfidf: model not fitted");
    std::map<std::string, double> counts;
    for (const std::string& tok : essay.tokens) counts[tok] += 1.0;

    SparseVec vec;
    vec.entries.reserve(counts.size());
    double sq = 0.0;
    for (auto& [tok, tf] : counts) {
        const double w = tf * tfidf_idf(model, tok);
        vec.entries.emplace_back(tok, w);
        sq += w * w;
    }
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto& [tok, w] : vec.entries) w *= inv;
    }
    return vec;
}

double SparseVec::dot(const SparseVec& other) const {
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < entries.size() && j < other.entries.size()) {
        int cmp = entries[i].first.compare(other.entries[j].first);
        if (cmp == 0) {
            acc += entries[i].second * other.entries[j].second;
            ++i;
            ++j;
        } else if (cmp < 0) {
            ++i;
        } else {
            ++j;
        }
    }
    return acc;
}

double SparseVec::squared_norm() const {
    double acc = 0.0;
    for (const auto& [tok, w] : entries) acc += w * w;
    return acc;
}

}  // namespace cdln

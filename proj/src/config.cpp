#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "error.hpp"

namespace cdln {

namespace {

int to_int(const std::string& key, const std::string& value) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        fail(errc::config, "config: " + key + " expects an integer, got '" + value + "'");
    return out;
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        fail(errc::config, "config: " + key + " expects a number, got '" + value + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        fail(errc::config, "config: " + key + " expects a non-negative integer, got '" + value +
                               "'");
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "model") {
        if (value != "cdln" && value != "svm" && value != "rnn" && value != "ann" &&
            value != "lstm")
            fail(errc::config, "config: model must be one of cdln|svm|rnn|ann|lstm, got '" +
                                   value + "'");
        model = value;
    } else if (key == "seed") {
        seed = to_u64(key, value);
    } else if (key == "learning_rate") {
        learning_rate = to_double(key, value);
    } else if (key == "batch_size") {
        batch_size = to_int(key, value);
    } else if (key == "epochs") {
        epochs = to_int(key, value);
        if (epochs < 1) fail(errc::config, "config: epochs must be >= 1");
    } else if (key == "dropout_rate") {
        dropout_rate = to_double(key, value);
    } else if (key == "k_folds") {
        k_folds = to_int(key, value);
    } else if (key == "threads") {
        threads = to_int(key, value);
    } else if (key == "train_ratio") {
        train_ratio = to_double(key, value);
    } else if (key == "embedding_dim") {
        embedding_dim = to_int(key, value);
    } else if (key == "min_count") {
        min_count = to_int(key, value);
    } else if (key == "max_tokens") {
        max_tokens = to_int(key, value);
    } else if (key == "max_sentence_len") {
        max_sentence_len = to_int(key, value);
    } else if (key == "embeddings_file") {
        embeddings_file = value;
    } else if (key == "rvnn_hidden") {
        rvnn_hidden = to_int(key, value);
    } else if (key == "conv_width") {
        conv_width = to_int(key, value);
    } else if (key == "pool_width") {
        pool_width = to_int(key, value);
    } else if (key == "channels") {
        channels = to_int(key, value);
    } else if (key == "rounds") {
        rounds = to_int(key, value);
    } else if (key == "conv_stride") {
        conv_stride = to_int(key, value);
    } else if (key == "pool_stride") {
        pool_stride = to_int(key, value);
    } else if (key == "lstm_hidden") {
        lstm_hidden = to_int(key, value);
    } else if (key == "dense_width") {
        dense_width = to_int(key, value);
    } else if (key == "rnn_hidden") {
        rnn_hidden = to_int(key, value);
    } else if (key == "ann_hidden") {
        ann_hidden = to_int(key, value);
    } else if (key == "lstm_baseline_hidden") {
        lstm_baseline_hidden = to_int(key, value);
    } else if (key == "svm_c") {
        svm_c = to_double(key, value);
    } else if (key == "svm_gamma") {
        svm_gamma = to_double(key, value);
    } else if (key == "svm_tol") {
        svm_tol = to_double(key, value);
    } else if (key == "svm_max_passes") {
        svm_max_passes = to_int(key, value);
    } else if (key == "prompt_ranges") {
        prompt_ranges = value;
    } else {
        fail(errc::config, "config: unknown key '" + key + "'");
    }
}

void RunConfig::load_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail(errc::format,
                 origin + ":" + std::to_string(line_no) + ": expected key=value, got '" + t + "'");
        set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io, "cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    load_text(buf.str(), path);
}

std::string RunConfig::dump() const {
    std::ostringstream out;
    out << "model=" << model << "\n";
    out << "seed=" << seed << "\n";
    out << "learning_rate=" << fmt_double(learning_rate) << "\n";
    out << "batch_size=" << batch_size << "\n";
    out << "epochs=" << resolved_epochs() << "\n";
    out << "dropout_rate=" << fmt_double(dropout_rate) << "\n";
    out << "k_folds=" << k_folds << "\n";
    out << "threads=" << threads << "\n";
    out << "train_ratio=" << fmt_double(train_ratio) << "\n";
    out << "embedding_dim=" << embedding_dim << "\n";
    out << "min_count=" << min_count << "\n";
    out << "max_tokens=" << max_tokens << "\n";
    out << "max_sentence_len=" << max_sentence_len << "\n";
    out << "embeddings_file=" << embeddings_file << "\n";
    out << "rvnn_hidden=" << rvnn_hidden << "\n";
    out << "conv_width=" << conv_width << "\n";
    out << "pool_width=" << pool_width << "\n";
    out << "channels=" << channels << "\n";
    out << "rounds=" << rounds << "\n";
    out << "conv_stride=" << conv_stride << "\n";
    out << "pool_stride=" << pool_stride << "\n";
    out << "lstm_hidden=" << lstm_hidden << "\n";
    out << "dense_width=" << dense_width << "\n";
    out << "rnn_hidden=" << rnn_hidden << "\n";
    out << "ann_hidden=" << ann_hidden << "\n";
    out << "lstm_baseline_hidden=" << lstm_baseline_hidden << "\n";
    out << "svm_c=" << fmt_double(svm_c) << "\n";
    out << "svm_gamma=" << fmt_double(svm_gamma) << "\n";
    out << "svm_tol=" << fmt_double(svm_tol) << "\n";
    out << "svm_max_passes=" << svm_max_passes << "\n";
    out << "prompt_ranges=" << prompt_ranges << "\n";
    return out.str();
}

int RunConfig::resolved_epochs() const {
    if (epochs > 0) return epochs;
    return model == "cdln" ? 15 : 8;
}

int RunConfig::resolved_threads() const {
    if (threads > 0) return threads;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void RunConfig::validate() const {
    if (learning_rate <= 0.0) fail(errc::config, "config: learning_rate must be > 0");
    if (batch_size < 1) fail(errc::config, "config: batch_size must be >= 1");
    if (epochs < 0) fail(errc::config, "config: epochs must be >= 1 (or 0 for the default)");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        fail(errc::config, "config: dropout_rate must lie in [0,1)");
    if (k_folds < 2) fail(errc::config, "config: k_folds must be >= 2");
    if (threads < 0) fail(errc::config, "config: threads must be >= 0");
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
        fail(errc::config, "config: train_ratio must lie strictly between 0 and 1");
    if (embedding_dim < 1) fail(errc::config, "config: embedding_dim must be >= 1");
    if (min_count < 1) fail(errc::config, "config: min_count must be >= 1");
    if (max_tokens < 1) fail(errc::config, "config: max_tokens must be >= 1");
    if (max_sentence_len < 1) fail(errc::config, "config: max_sentence_len must be >= 1");
    if (rvnn_hidden < 1) fail(errc::config, "config: rvnn_hidden must be >= 1");
    if (conv_width < 1 || pool_width < 1 || channels < 1 || rounds < 1 || conv_stride < 1 ||
        pool_stride < 1)
        fail(errc::config, "config: idea-branch dimensions and strides must be positive");
    if (lstm_hidden < 1 || dense_width < 1)
        fail(errc::config, "config: fusion head dimensions must be positive");
    if (rnn_hidden < 1 || ann_hidden < 1 || lstm_baseline_hidden < 1)
        fail(errc::config, "config: baseline dimensions must be positive");
    if (svm_c <= 0.0) fail(errc::config, "config: svm_c must be > 0");
    if (svm_gamma < 0.0) fail(errc::config, "config: svm_gamma must be >= 0");
    if (svm_tol <= 0.0) fail(errc::config, "config: svm_tol must be > 0");
    if (svm_max_passes < 1) fail(errc::config, "config: svm_max_passes must be >= 1");
    (void)parse_prompt_ranges(prompt_ranges);
}

}  // namespace cdln

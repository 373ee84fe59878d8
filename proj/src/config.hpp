#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace cdln {

// Resolved run configuration. Sources, in order of precedence: built-in
// defaults, a key=value config file ('#' comments), then command-line
// overrides. Unknown keys are rejected against the schema below.
struct RunConfig {
    std::string model = "cdln";  // cdln | svm | rnn | ann | lstm
    std::uint64_t seed = 13;

    // training
    double learning_rate = 1e-4;
    int batch_size = 32;
    int epochs = 0;  // 0 = per-model default (cdln 15, neural baselines 8)
    double dropout_rate = 0.3;
    int k_folds = 8;
    int threads = 1;  // batch-gradient workers; 0 = hardware concurrency
    double train_ratio = 0.8;

    // text pipeline
    int embedding_dim = 100;
    int min_count = 2;
    int max_tokens = 500;
    int max_sentence_len = 60;
    std::string embeddings_file;

    // structural branch
    int rvnn_hidden = 150;

    // idea branch
    int conv_width = 105;
    int pool_width = 90;
    int channels = 8;
    int rounds = 5;
    int conv_stride = 1;
    int pool_stride = 4;

    // fusion head
    int lstm_hidden = 256;
    int dense_width = 120;

    // baselines
    int rnn_hidden = 64;
    int ann_hidden = 64;
    int lstm_baseline_hidden = 128;
    double svm_c = 1.0;
    double svm_gamma = 0.0;  // 0 = 1 / feature count
    double svm_tol = 1e-3;
    int svm_max_passes = 100;

    std::string prompt_ranges = "2:12,1:6,0:3,0:3,0:4,0:4,0:30,0:60";

    void set(const std::string& key, const std::string& value);
    void load_file(const std::string& path);
    void load_text(const std::string& text, const std::string& origin);
    std::string dump() const;  // canonical key=value form, stable order
    void validate() const;

    int resolved_epochs() const;
    int resolved_threads() const;
    std::vector<PromptSpec> prompts() const { return parse_prompt_ranges(prompt_ranges); }
};

}  // namespace cdln

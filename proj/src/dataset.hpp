#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace cdln {

// Score range and bookkeeping for one essay prompt. Defaults cover the eight
// ASAP prompts; ranges can be overridden through the `prompt_ranges` config
// key for other datasets.
struct PromptSpec {
    int prompt_id = 0;
    int score_min = 0;
    int score_max = 0;
    int essay_count = 0;  // informational
    int avg_length = 0;   // informational
};

struct Essay {
    int essay_id = 0;
    int prompt_id = 0;
    std::string text;
    int rater1 = 0;
    int rater2 = 0;
    int raw_score = 0;
    double normalized_score = 0.0;
};

struct LoadStats {
    std::size_t rows_read = 0;
    std::size_t essays_loaded = 0;
    std::size_t skipped_missing_scores = 0;
    std::size_t skipped_unknown_prompt = 0;
    std::size_t clamped_scores = 0;
};

struct DatasetSplit {
    std::vector<Essay> train;
    std::vector<Essay> test;
};

std::vector<PromptSpec> default_prompt_specs();

// "2:12,1:6,0:3,..." one min:max pair per prompt, 1-based prompt ids
std::vector<PromptSpec> parse_prompt_ranges(const std::string& spec_text);

const PromptSpec& prompt_spec_for(const std::vector<PromptSpec>& specs, int prompt_id);

// Sum of the two domain-1 rater scores, clamped into the prompt's configured
// range. Clamping logs a warning and flips *clamped; the published ranges and
// the rater-sum rule disagree for some prompts, and the range wins here.
int resolve_score(int rater1, int rater2, const PromptSpec& spec, bool* clamped = nullptr);

double normalize_score(int raw, const PromptSpec& spec);

// Tab-separated ASAP reader. Required header columns: essay_id, essay_set,
// essay, rater1_domain1, rater2_domain1; other columns are ignored. Rows
// missing rater scores are skipped and counted.
std::vector<Essay> load_asap_tsv(const std::string& path, const std::vector<PromptSpec>& specs,
                                 LoadStats* stats = nullptr);

// Deterministic shuffled split, stratified by prompt.
DatasetSplit split_train_test(const std::vector<Essay>& essays, double ratio, std::uint64_t seed);

// essay_id -> fold index in [0,k); fold sizes differ by at most one
std::map<int, int> kfold_split(const std::vector<Essay>& essays, int k, std::uint64_t seed);

}  // namespace cdln

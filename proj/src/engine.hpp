#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "metrics.hpp"
#include "svm.hpp"
#include "train.hpp"

namespace cdln {

// A trained grader of any kind, with everything needed to score essays:
// resolved config, vocabulary, and either a neural model or the TF-IDF + SVM
// pair. Checkpoint persistence keeps all of it in one file.
class Grader {
public:
    const std::string& kind() const { return kind_; }
    const RunConfig& config() const { return cfg_; }

    // normalized prediction in [0,1] for one tokenized essay
    double predict_normalized(const TokenizedEssay& essay, const PromptSpec& spec);

    // integer grade on the prompt scale plus the normalized value
    int grade_text(const std::string& text, const PromptSpec& spec, double* normalized_out);

    void save(const std::string& path) const;
    static Grader load(const std::string& path);

    NeuralGrader* neural() { return neural_.get(); }
    SvmModel* svm() { return svm_.get(); }
    const TfidfModel& tfidf() const { return tfidf_; }

private:
    friend Grader train_grader(const RunConfig&, const std::vector<Essay>&, const EpochCallback&);

    std::string kind_;
    RunConfig cfg_;
    std::unique_ptr<NeuralGrader> neural_;
    std::unique_ptr<SvmModel> svm_;
    TfidfModel tfidf_;
};

// Tokenize once, build the vocabulary from the training set, train the
// configured model.
Grader train_grader(const RunConfig& cfg, const std::vector<Essay>& train,
                    const EpochCallback& on_epoch = {});

// Scores every essay against its prompt spec; QWK runs over the full label
// range spanned by the evaluated prompts.
MetricsReport evaluate_grader(Grader& grader, const std::vector<Essay>& essays,
                              const std::vector<PromptSpec>& specs);

struct CrossvalResult {
    std::vector<MetricsReport> folds;
    MetricsReport mean;  // arithmetic mean over folds; undefined entries skipped
};

// k-fold cross-validation; folds train and evaluate independently (in
// parallel) with fold-derived seeds.
CrossvalResult cross_validate(const RunConfig& cfg, const std::vector<Essay>& essays,
                              const std::function<void(int fold, const MetricsReport&)>& on_fold = {});

struct RobustnessResult {
    std::vector<GradePair> pairs;  // denormalized integer-scale grades
    std::vector<int> essay_ids;
    double delta = 0.0;
    std::vector<double> bucket_original;
    std::vector<double> bucket_modified;

    // plot-ready two-column text: original average, tab, modified average
    std::string bucket_table() const;
};

// Grade aligned original/modified essay files; both must list the same
// essay_ids in the same order.
RobustnessResult robustness_check(Grader& grader, const std::vector<Essay>& original,
                                  const std::vector<Essay>& modified,
                                  const std::vector<PromptSpec>& specs, std::size_t bucket);

struct GradcheckOutcome {
    bool pass = false;
    std::string report;  // one line per check
};

// Finite-difference verification of every primitive and of all four neural
// model families at toy dimensions.
GradcheckOutcome run_gradcheck_suite();

// Chart parse of one sentence with a seeded throwaway model (or the
// composition net of a trained cdln grader): bracketing plus span scores.
std::string parse_debug(const RunConfig& cfg, const std::string& sentence, Grader* grader = nullptr);

// per-prompt dataset summary used by the ingest command
std::string dataset_stats(const std::vector<Essay>& essays, const std::vector<PromptSpec>& specs,
                          const LoadStats& load_stats);

}  // namespace cdln

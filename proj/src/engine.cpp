#include "engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "gradcheck.hpp"
#include "log.hpp"

namespace cdln {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

TokenizedEssay tokenize_checked(const Essay& e) {
    TokenizedEssay t = tokenize_essay(e.text);
    if (t.tokens.empty())
        fail(errc::data, "essay " + std::to_string(e.essay_id) + " has no tokens");
    return t;
}

// static essay partition over worker threads; writes go to caller-indexed
// slots so results are identical for any worker count
void parallel_over(std::size_t count, const std::function<void(std::size_t)>& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = std::min<std::size_t>(count, hw == 0 ? 1 : hw);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

double Grader::predict_normalized(const TokenizedEssay& essay, const PromptSpec& spec) {
    if (neural_) return neural_->predict(essay);
    if (!svm_) fail(errc::contract, "grader holds no model");
    SparseVec vec = tfidf_transform(tfidf_, essay);
    int label = svm_->predict(vec);
    label = std::clamp(label, spec.score_min, spec.score_max);
    return normalize_score(label, spec);
}

int Grader::grade_text(const std::string& text, const PromptSpec& spec, double* normalized_out) {
    TokenizedEssay tok = tokenize_essay(text);
    if (tok.tokens.empty()) fail(errc::data, "essay text has no tokens");
    const double norm = predict_normalized(tok, spec);
    if (normalized_out) *normalized_out = norm;
    return denormalize_and_round(norm, spec);
}

Grader train_grader(const RunConfig& cfg, const std::vector<Essay>& train,
                    const EpochCallback& on_epoch) {
    cfg.validate();
    if (train.empty()) fail(errc::data, "train: empty training set");

    Grader g;
    g.kind_ = cfg.model;
    g.cfg_ = cfg;

    std::vector<TokenizedEssay> tokenized;
    std::vector<double> targets;
    tokenized.reserve(train.size());
    for (const Essay& e : train) {
        tokenized.push_back(tokenize_checked(e));
        targets.push_back(e.normalized_score);
    }

    if (cfg.model == "svm") {
        g.tfidf_ = tfidf_fit(tokenized);
        std::vector<SparseVec> vectors;
        std::vector<int> labels;
        vectors.reserve(tokenized.size());
        for (std::size_t i = 0; i < tokenized.size(); ++i) {
            vectors.push_back(tfidf_transform(g.tfidf_, tokenized[i]));
            labels.push_back(train[i].raw_score);
        }
        SvmConfig scfg;
        scfg.C = cfg.svm_c;
        scfg.gamma = cfg.svm_gamma > 0.0
                         ? cfg.svm_gamma
                         : 1.0 / static_cast<double>(std::max<std::size_t>(
                                     1, g.tfidf_.ordered_tokens.size()));
        scfg.tol = cfg.svm_tol;
        scfg.max_passes = cfg.svm_max_passes;
        scfg.seed = cfg.seed;
        g.svm_ = std::make_unique<SvmModel>(SvmModel::train(std::move(vectors), labels, scfg));
    } else {
        Vocabulary vocab =
            Vocabulary::build(tokenized, static_cast<std::size_t>(cfg.min_count));
        g.neural_ = make_neural_grader(cfg.model, cfg, std::move(vocab));
        train_neural(*g.neural_, tokenized, targets, cfg, on_epoch);
    }
    return g;
}

MetricsReport evaluate_grader(Grader& grader, const std::vector<Essay>& essays,
                              const std::vector<PromptSpec>& specs) {
    if (essays.empty()) fail(errc::data, "evaluate: empty essay set");

    const std::size_t n = essays.size();
    std::vector<double> pred_norm(n), gold_norm(n);
    std::vector<int> pred_int(n), gold_int(n);

    parallel_over(n, [&](std::size_t i) {
        const Essay& e = essays[i];
        const PromptSpec& spec = prompt_spec_for(specs, e.prompt_id);
        TokenizedEssay tok = tokenize_checked(e);
        const double p = grader.predict_normalized(tok, spec);
        pred_norm[i] = p;
        gold_norm[i] = e.normalized_score;
        pred_int[i] = denormalize_and_round(p, spec);
        gold_int[i] = e.raw_score;
    });

    int range_min = std::numeric_limits<int>::max();
    int range_max = std::numeric_limits<int>::min();
    for (const Essay& e : essays) {
        const PromptSpec& spec = prompt_spec_for(specs, e.prompt_id);
        range_min = std::min(range_min, spec.score_min);
        range_max = std::max(range_max, spec.score_max);
    }

    MetricsReport report;
    report.n = n;
    report.accuracy = accuracy(pred_int, gold_int);
    report.mse = mse(pred_norm, gold_norm);
    report.pcc = n >= 2 ? pearson(pred_norm, gold_norm) : std::nullopt;
    report.qwk = qwk(pred_int, gold_int, range_min, range_max);
    return report;
}

CrossvalResult cross_validate(
    const RunConfig& cfg, const std::vector<Essay>& essays,
    const std::function<void(int fold, const MetricsReport&)>& on_fold) {
    cfg.validate();
    const int k = cfg.k_folds;
    std::map<int, int> assignment = kfold_split(essays, k, cfg.seed);
    const std::vector<PromptSpec> specs = cfg.prompts();

    CrossvalResult result;
    result.folds.resize(static_cast<std::size_t>(k));

    parallel_over(static_cast<std::size_t>(k), [&](std::size_t fold) {
        std::vector<Essay> fold_train, fold_test;
        for (const Essay& e : essays) {
            if (assignment.at(e.essay_id) == static_cast<int>(fold))
                fold_test.push_back(e);
            else
                fold_train.push_back(e);
        }
        RunConfig fold_cfg = cfg;
        fold_cfg.seed = derive_seed(cfg.seed, derive_seed(0xf01d, fold));
        fold_cfg.threads = 1;  // folds already run in parallel
        Grader g = train_grader(fold_cfg, fold_train);
        result.folds[fold] = evaluate_grader(g, fold_test, specs);
    });

    if (on_fold)
        for (int f = 0; f < k; ++f) on_fold(f, result.folds[static_cast<std::size_t>(f)]);

    MetricsReport& mean = result.mean;
    double acc = 0.0, err = 0.0, pcc_sum = 0.0, qwk_sum = 0.0;
    std::size_t pcc_n = 0, qwk_n = 0;
    for (const MetricsReport& r : result.folds) {
        mean.n += r.n;
        acc += r.accuracy;
        err += r.mse;
        if (r.pcc) {
            pcc_sum += *r.pcc;
            ++pcc_n;
        }
        if (r.qwk) {
            qwk_sum += *r.qwk;
            ++qwk_n;
        }
    }
    const double kd = static_cast<double>(k);
    mean.accuracy = acc / kd;
    mean.mse = err / kd;
    if (pcc_n > 0) mean.pcc = pcc_sum / static_cast<double>(pcc_n);
    if (qwk_n > 0) mean.qwk = qwk_sum / static_cast<double>(qwk_n);
    return result;
}

std::string RobustnessResult::bucket_table() const {
    std::string out;
    for (std::size_t i = 0; i < bucket_original.size(); ++i)
        out += fmt(bucket_original[i]) + "\t" + fmt(bucket_modified[i]) + "\n";
    return out;
}

RobustnessResult robustness_check(Grader& grader, const std::vector<Essay>& original,
                                  const std::vector<Essay>& modified,
                                  const std::vector<PromptSpec>& specs, std::size_t bucket) {
    if (original.empty()) fail(errc::data, "robustness: empty essay set");
    if (original.size() != modified.size())
        fail(errc::data, "robustness: original and modified files differ in size (" +
                             std::to_string(original.size()) + " vs " +
                             std::to_string(modified.size()) + ")");
    for (std::size_t i = 0; i < original.size(); ++i)
        if (original[i].essay_id != modified[i].essay_id)
            fail(errc::data, "robustness: essay_id mismatch at row " + std::to_string(i + 1) +
                                 " (" + std::to_string(original[i].essay_id) + " vs " +
                                 std::to_string(modified[i].essay_id) + ")");

    const std::size_t n = original.size();
    RobustnessResult result;
    result.pairs.resize(n);
    result.essay_ids.resize(n);

    parallel_over(n, [&](std::size_t i) {
        const PromptSpec& spec = prompt_spec_for(specs, original[i].prompt_id);
        TokenizedEssay tok_orig = tokenize_checked(original[i]);
        TokenizedEssay tok_mod = tokenize_checked(modified[i]);
        const int g_orig = denormalize_and_round(grader.predict_normalized(tok_orig, spec), spec);
        const int g_mod = denormalize_and_round(grader.predict_normalized(tok_mod, spec), spec);
        result.pairs[i] = GradePair{static_cast<double>(g_orig), static_cast<double>(g_mod)};
        result.essay_ids[i] = original[i].essay_id;
    });

    result.delta = robustness_delta(result.pairs);
    std::vector<double> orig_grades(n), mod_grades(n);
    for (std::size_t i = 0; i < n; ++i) {
        orig_grades[i] = result.pairs[i].original;
        mod_grades[i] = result.pairs[i].modified;
    }
    result.bucket_original = bucket_average(orig_grades, bucket);
    result.bucket_modified = bucket_average(mod_grades, bucket);
    return result;
}

std::string dataset_stats(const std::vector<Essay>& essays, const std::vector<PromptSpec>& specs,
                          const LoadStats& load_stats) {
    std::ostringstream out;
    out << "essays=" << essays.size() << "\n";
    out << "rows_read=" << load_stats.rows_read << "\n";
    out << "skipped_missing_scores=" << load_stats.skipped_missing_scores << "\n";
    out << "skipped_unknown_prompt=" << load_stats.skipped_unknown_prompt << "\n";
    out << "clamped_scores=" << load_stats.clamped_scores << "\n";
    std::map<int, std::vector<const Essay*>> by_prompt;
    for (const Essay& e : essays) by_prompt[e.prompt_id].push_back(&e);
    for (auto& [prompt, group] : by_prompt) {
        const PromptSpec& spec = prompt_spec_for(specs, prompt);
        std::size_t tokens = 0;
        int lo = group.front()->raw_score, hi = lo;
        for (const Essay* e : group) {
            tokens += tokenize(e->text).size();
            lo = std::min(lo, e->raw_score);
            hi = std::max(hi, e->raw_score);
        }
        out << "prompt" << prompt << ".count=" << group.size() << "\n";
        out << "prompt" << prompt << ".avg_tokens=" << tokens / group.size() << "\n";
        out << "prompt" << prompt << ".score_range=" << spec.score_min << ":" << spec.score_max
            << "\n";
        out << "prompt" << prompt << ".observed_scores=" << lo << ":" << hi << "\n";
    }
    return out.str();
}

}  // namespace cdln

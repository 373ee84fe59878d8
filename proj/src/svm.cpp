#include "svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "log.hpp"
#include "rng.hpp"

namespace cdln {

double gaussian_kernel(const SparseVec& a, const SparseVec& b, double gamma) {
    const double sq = a.squared_norm() + b.squared_norm() - 2.0 * a.dot(b);
    return std::exp(-gamma * std::max(0.0, sq));
}

double BinarySvm::decision(const std::vector<SparseVec>& train, const SparseVec& x,
                           double gamma) const {
    double acc = bias;
    for (std::size_t k = 0; k < sv.size(); ++k)
        acc += coeff[k] * gaussian_kernel(train[sv[k]], x, gamma);
    return acc;
}

namespace {

// simplified sequential minimal optimization on a precomputed kernel matrix
BinarySvm smo_train(const std::vector<double>& K, std::size_t n, const std::vector<int>& y,
                    const SvmConfig& cfg, Rng& rng) {
    std::vector<double> alpha(n, 0.0);
    double b = 0.0;

    auto f = [&](std::size_t i) {
        double acc = b;
        for (std::size_t k = 0; k < n; ++k)
            if (alpha[k] != 0.0) acc += alpha[k] * y[k] * K[k * n + i];
        return acc;
    };

    int passes = 0;
    while (passes < cfg.max_passes) {
        int changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double Ei = f(i) - y[i];
            const bool violates = (y[i] * Ei < -cfg.tol && alpha[i] < cfg.C) ||
                                  (y[i] * Ei > cfg.tol && alpha[i] > 0.0);
            if (!violates) continue;

            std::size_t j = rng.below(n - 1);
            if (j >= i) ++j;
            const double Ej = f(j) - y[j];

            const double ai_old = alpha[i], aj_old = alpha[j];
            double lo, hi;
            if (y[i] != y[j]) {
                lo = std::max(0.0, aj_old - ai_old);
                hi = std::min(cfg.C, cfg.C + aj_old - ai_old);
            } else {
                lo = std::max(0.0, ai_old + aj_old - cfg.C);
                hi = std::min(cfg.C, ai_old + aj_old);
            }
            if (lo >= hi) continue;

            const double eta = 2.0 * K[i * n + j] - K[i * n + i] - K[j * n + j];
            if (eta >= 0.0) continue;

            double aj = aj_old - y[j] * (Ei - Ej) / eta;
            aj = std::clamp(aj, lo, hi);
            if (std::fabs(aj - aj_old) < 1e-5) continue;
            const double ai = ai_old + y[i] * y[j] * (aj_old - aj);

            alpha[i] = ai;
            alpha[j] = aj;

            const double b1 = b - Ei - y[i] * (ai - ai_old) * K[i * n + i] -
                              y[j] * (aj - aj_old) * K[i * n + j];
            const double b2 = b - Ej - y[i] * (ai - ai_old) * K[i * n + j] -
                              y[j] * (aj - aj_old) * K[j * n + j];
            if (ai > 0.0 && ai < cfg.C)
                b = b1;
            else if (aj > 0.0 && aj < cfg.C)
                b = b2;
            else
                b = 0.5 * (b1 + b2);
            ++changed;
        }
        passes = changed == 0 ? passes + 1 : 0;
    }

    BinarySvm machine;
    machine.bias = b;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) {
            machine.sv.push_back(i);
            machine.coeff.push_back(alpha[i] * y[i]);
        }
    }
    return machine;
}

}  // namespace

BinarySvm train_binary(const std::vector<SparseVec>& vectors, const std::vector<int>& y,
                       const SvmConfig& cfg) {
    if (vectors.empty() || vectors.size() != y.size())
        fail(errc::contract, "svm: need matching nonzero vectors and labels");
    if (cfg.gamma <= 0.0) fail(errc::config, "svm: gamma must be > 0");
    if (cfg.C <= 0.0) fail(errc::config, "svm: C must be > 0");
    const std::size_t n = vectors.size();
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        K[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = gaussian_kernel(vectors[i], vectors[j], cfg.gamma);
            K[i * n + j] = k;
            K[j * n + i] = k;
        }
    }
    Rng rng(derive_seed(cfg.seed, "binary_svm"));
    return smo_train(K, n, y, cfg, rng);
}

SvmModel SvmModel::train(std::vector<SparseVec> vectors, const std::vector<int>& labels,
                         const SvmConfig& cfg) {
    if (vectors.size() != labels.size() || vectors.empty())
        fail(errc::contract, "svm: need matching nonzero vectors and labels");
    if (cfg.C <= 0.0) fail(errc::config, "svm: C must be > 0");
    if (cfg.gamma <= 0.0) fail(errc::config, "svm: gamma must be > 0");
    if (cfg.max_passes < 1) fail(errc::config, "svm: max_passes must be >= 1");

    SvmModel model;
    model.gamma_ = cfg.gamma;

    std::set<int> distinct(labels.begin(), labels.end());
    if (distinct.size() < 2) {
        model.fallback_label_ = *distinct.begin();
        log_warn("svm: single class " + std::to_string(model.fallback_label_) +
                 " in training data; predictor is constant");
        return model;
    }

    model.vectors_ = std::move(vectors);
    const std::size_t n = model.vectors_.size();

    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        K[i * n + i] = 1.0;  // exp(0)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = gaussian_kernel(model.vectors_[i], model.vectors_[j], cfg.gamma);
            K[i * n + j] = k;
            K[j * n + i] = k;
        }
    }

    for (int cls : distinct) {
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == cls ? 1 : -1;
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(cls) + 101));
        model.class_labels_.push_back(cls);
        model.machines_.push_back(smo_train(K, n, y, cfg, rng));
    }

    // shrink the shared vector pool to rows some machine references
    std::vector<bool> used(n, false);
    for (const BinarySvm& m : model.machines_)
        for (std::size_t idx : m.sv) used[idx] = true;
    std::vector<std::size_t> remap(n, 0);
    std::vector<SparseVec> kept;
    for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) {
            remap[i] = kept.size();
            kept.push_back(std::move(model.vectors_[i]));
        }
    }
    for (BinarySvm& m : model.machines_)
        for (std::size_t& idx : m.sv) idx = remap[idx];
    model.vectors_ = std::move(kept);
    return model;
}

int SvmModel::predict(const SparseVec& x) const {
    if (machines_.empty()) return fallback_label_;
    int best_label = class_labels_[0];
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < machines_.size(); ++c) {
        const double score = machines_[c].decision(vectors_, x, gamma_);
        if (score > best_score) {  // ties keep the smaller label (sorted order)
            best_score = score;
            best_label = class_labels_[c];
        }
    }
    return best_label;
}

SvmModel SvmModel::assemble(std::vector<SparseVec> vectors, std::vector<int> class_labels,
                            std::vector<BinarySvm> machines, double gamma, int fallback_label) {
    SvmModel model;
    model.vectors_ = std::move(vectors);
    model.class_labels_ = std::move(class_labels);
    model.machines_ = std::move(machines);
    model.gamma_ = gamma;
    model.fallback_label_ = fallback_label;
    return model;
}

}  // namespace cdln

#pragma once

#include <cstdint>
#include <vector>

#include "text.hpp"

namespace cdln {

struct SvmConfig {
    double C = 1.0;
    double gamma = 0.0;  // resolved by the caller; must be > 0 here
    double tol = 1e-3;
    int max_passes = 100;
    std::uint64_t seed = 13;
};

double gaussian_kernel(const SparseVec& a, const SparseVec& b, double gamma);

// One binary machine trained by simplified SMO on the Gaussian kernel.
struct BinarySvm {
    std::vector<double> coeff;      // alpha_i * y_i for kept support vectors
    std::vector<std::size_t> sv;    // indices into the shared training set
    double bias = 0.0;

    double decision(const std::vector<SparseVec>& train, const SparseVec& x, double gamma) const;
};

// Binary training entry point; y holds +1/-1. sv indices refer to `vectors`.
BinarySvm train_binary(const std::vector<SparseVec>& vectors, const std::vector<int>& y,
                       const SvmConfig& cfg);

// One-vs-rest multiclass SVM over integer labels. A single-label training set
// degenerates into a constant predictor with a warning.
class SvmModel {
public:
    static SvmModel train(std::vector<SparseVec> vectors, const std::vector<int>& labels,
                          const SvmConfig& cfg);

    int predict(const SparseVec& x) const;

    bool degenerate() const { return machines_.empty(); }
    const std::vector<int>& class_labels() const { return class_labels_; }
    const std::vector<BinarySvm>& machines() const { return machines_; }
    const std::vector<SparseVec>& support_vectors() const { return vectors_; }
    double gamma() const { return gamma_; }

    // reassemble from persisted parts
    static SvmModel assemble(std::vector<SparseVec> vectors, std::vector<int> class_labels,
                             std::vector<BinarySvm> machines, double gamma, int fallback_label);

private:
    std::vector<SparseVec> vectors_;  // training vectors referenced by machines
    std::vector<int> class_labels_;   // sorted distinct labels, one machine each
    std::vector<BinarySvm> machines_;
    double gamma_ = 0.0;
    int fallback_label_ = 0;  // degenerate single-class answer
};

}  // namespace cdln

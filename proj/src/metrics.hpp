#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace cdln {

// Undefined metrics (zero variance, degenerate agreement) are reported as
// empty optionals rather than failing the run.
struct MetricsReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    std::optional<double> pcc;
    std::optional<double> qwk;
    double mse = 0.0;

    // flat key=value block
    std::string to_text() const;
    // single-line record: "metrics n accuracy pcc qwk mse" space-separated,
    // "na" for undefined values
    std::string to_record() const;
};

// round(pred * (max-min)) + min with half-up rounding, clamped to the range
int denormalize_and_round(double pred, const PromptSpec& spec);

double accuracy(std::span<const int> pred, std::span<const int> gold);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

// Cohen's kappa with quadratic weights over the label range [min,max]
std::optional<double> qwk(std::span<const int> pred, std::span<const int> gold, int min, int max);

double mse(std::span<const double> pred, std::span<const double> gold);

struct GradePair {
    double original = 0.0;
    double modified = 0.0;
};

// mean squared grade difference between original and modified essays
double robustness_delta(std::span<const GradePair> pairs);

// consecutive-bucket means; the final partial bucket averages over its size
std::vector<double> bucket_average(std::span<const double> grades, std::size_t bucket);

}  // namespace cdln

#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cdln {

namespace {
std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "na"; }
}  // namespace

std::string MetricsReport::to_text() const {
    std::string out;
    out += "n=" + std::to_string(n) + "\n";
    out += "accuracy=" + fmt(accuracy) + "\n";
    out += "pcc=" + fmt_opt(pcc) + "\n";
    out += "qwk=" + fmt_opt(qwk) + "\n";
    out += "mse=" + fmt(mse) + "\n";
    return out;
}

std::string MetricsReport::to_record() const {
    return "metrics " + std::to_string(n) + " " + fmt(accuracy) + " " + fmt_opt(pcc) + " " +
           fmt_opt(qwk) + " " + fmt(mse);
}

int denormalize_and_round(double pred, const PromptSpec& spec) {
    if (pred < 0.0 || pred > 1.0)
        fail(errc::contract, "denormalize: prediction " + std::to_string(pred) + " outside [0,1]");
    const double span = static_cast<double>(spec.score_max - spec.score_min);
    const int rounded = static_cast<int>(std::floor(pred * span + 0.5));  // half-up
    return std::clamp(rounded + spec.score_min, spec.score_min, spec.score_max);
}

double accuracy(std::span<const int> pred, std::span<const int> gold) {
    if (pred.size() != gold.size() || pred.empty())
        fail(errc::contract, "accuracy: need equal nonzero lengths");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] == gold[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(pred.size());
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(errc::contract, "pearson: length mismatch");
    if (x.size() < 2) fail(errc::contract, "pearson: need at least two samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

std::optional<double> qwk(std::span<const int> pred, std::span<const int> gold, int min, int max) {
    if (pred.size() != gold.size() || pred.empty())
        fail(errc::contract, "qwk: need equal nonzero lengths");
    if (max <= min) fail(errc::contract, "qwk: invalid label range");
    const std::size_t R = static_cast<std::size_t>(max - min) + 1;
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] < min || pred[i] > max || gold[i] < min || gold[i] > max)
            fail(errc::contract, "qwk: value outside [" + std::to_string(min) + "," +
                                     std::to_string(max) + "]");

    std::vector<double> observed(R * R, 0.0);
    std::vector<double> pred_marginal(R, 0.0), gold_marginal(R, 0.0);
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const std::size_t i = static_cast<std::size_t>(pred[k] - min);
        const std::size_t j = static_cast<std::size_t>(gold[k] - min);
        observed[i * R + j] += 1.0;
        pred_marginal[i] += 1.0;
        gold_marginal[j] += 1.0;
    }
    const double n = static_cast<double>(pred.size());
    const double denom_w = static_cast<double>((max - min)) * static_cast<double>((max - min));
    double wo = 0.0, we = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
        for (std::size_t j = 0; j < R; ++j) {
            const double d = static_cast<double>(i) - static_cast<double>(j);
            const double w = d * d / denom_w;
            wo += w * observed[i * R + j];
            we += w * pred_marginal[i] * gold_marginal[j] / n;
        }
    }
    if (we == 0.0) return std::nullopt;
    return 1.0 - wo / we;
}

double mse(std::span<const double> pred, std::span<const double> gold) {
    if (pred.size() != gold.size() || pred.empty())
        fail(errc::contract, "mse: need equal nonzero lengths");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - gold[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double robustness_delta(std::span<const GradePair> pairs) {
    if (pairs.empty()) fail(errc::contract, "robustness: empty pair list");
    double acc = 0.0;
    for (const GradePair& p : pairs) {
        const double d = p.original - p.modified;
        acc += d * d;
    }
    return acc / static_cast<double>(pairs.size());
}

std::vector<double> bucket_average(std::span<const double> grades, std::size_t bucket) {
    if (grades.empty()) fail(errc::contract, "bucket_average: empty input");
    if (bucket < 1) fail(errc::contract, "bucket_average: bucket must be >= 1");
    std::vector<double> out;
    for (std::size_t start = 0; start < grades.size(); start += bucket) {
        const std::size_t end = std::min(grades.size(), start + bucket);
        double acc = 0.0;
        for (std::size_t i = start; i < end; ++i) acc += grades[i];
        out.push_back(acc / static_cast<double>(end - start));
    }
    return out;
}

}  // namespace cdln

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace cdln {

std::string FdReport::summary() const {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: max rel err %.3e (tol %.1e) over %zu elements",
                  pass ? "pass" : "FAIL", max_rel_err, tolerance, elements_checked);
    std::string s = buf;
    if (!worst_param.empty())
        s += ", worst at " + worst_param + "[" + std::to_string(worst_index) + "]";
    return s;
}

FdReport finite_diff_check(std::span<Parameter* const> params,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn, double epsilon,
                           double tolerance) {
    if (epsilon <= 0.0) fail(errc::config, "finite_diff_check: epsilon must be > 0");
    if (loss_fn() != loss_fn())
        fail(errc::harness, "finite_diff_check: model function is not deterministic");

    grad_fn();
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const Parameter* p : params) analytic.push_back(p->grad);

    FdReport report;
    report.tolerance = tolerance;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter* p = params[pi];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + epsilon;
            const double up = loss_fn();
            p->value[i] = saved - epsilon;
            const double down = loss_fn();
            p->value[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double a = analytic[pi][i];
            const double rel =
                std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
            ++report.elements_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = p->name;
                report.worst_index = i;
            }
            if (rel >= tolerance && report.failures.size() < 8)
                report.failures.push_back(FdIssue{p->name, i, a, numeric, rel});
        }
    }
    report.pass = report.max_rel_err < tolerance;
    return report;
}

}  // namespace cdln

#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "autodiff.hpp"

namespace cdln {

struct FdIssue {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct FdReport {
    bool pass = false;
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t elements_checked = 0;
    double tolerance = 0.0;
    std::vector<FdIssue> failures;  // capped at a handful for readable output

    std::string summary() const;
};

// Central-difference check of analytic gradients.
//
// `loss_fn` evaluates the scalar objective from the current parameter values
// with no side effects; `grad_fn` zeroes gradients and runs forward+backward,
// leaving d(loss)/d(param) in each Parameter::grad. Both must be
// deterministic (dropout disabled); the harness evaluates loss_fn twice up
// front and rejects the model function if the results differ.
//
// Relative error uses a unit floor, |a-n| / max(1, |a|, |n|), so that
// near-zero gradients are compared absolutely.
FdReport finite_diff_check(std::span<Parameter* const> params,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn, double epsilon = 1e-5,
                           double tolerance = 1e-4);

}  // namespace cdln

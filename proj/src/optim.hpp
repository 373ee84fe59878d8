#pragma once

#include <span>
#include <unordered_map>
#include <utility>

#include "autodiff.hpp"

namespace cdln {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    // first/second moment per parameter name
    std::unordered_map<std::string, std::pair<Tensor, Tensor>> moments;
};

// One bias-corrected Adam update over `params`, consuming and zeroing their
// gradients. `step` is 1-based. lr == 0 is a permitted no-op (degenerate
// rate); negative rates are rejected.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& cfg,
               int step);

class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {
        if (cfg.lr < 0.0) fail(errc::config, "adam: learning rate must be >= 0");
    }

    void step(std::span<Parameter* const> params) { adam_step(params, state_, cfg_, ++t_); }
    int steps_taken() const { return t_; }

private:
    AdamConfig cfg_;
    AdamState state_;
    int t_ = 0;
};

}  // namespace cdln

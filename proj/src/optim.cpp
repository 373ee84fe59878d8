#include "optim.hpp"

#include <cmath>

namespace cdln {

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& cfg,
               int step) {
    if (cfg.lr < 0.0) fail(errc::config, "adam: learning rate must be >= 0");
    if (step < 1) fail(errc::contract, "adam: step must be >= 1");
    const double bc1 = 1.0 - std::pow(cfg.beta1, step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, step);
    for (Parameter* p : params) {
        auto& [m, v] = state.moments[p->name];
        if (m.empty()) {
            m = Tensor::zeros(p->value.shape());
            v = Tensor::zeros(p->value.shape());
        }
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p->value[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        p->zero_grad();
    }
}

}  // namespace cdln

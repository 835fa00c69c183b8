// SPDX-License-Identifier: Apache-2.0

#include "graphmae/optim.hpp"

#include <cmath>

#include "graphmae/errors.hpp"

namespace graphmae {

void OptimConfig::validate() const {
    if (lr0 <= 0) throw ValidationError("optim: lr0 must be positive");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
        throw ValidationError("optim: betas must lie in [0,1)");
    if (eps_adam <= 0) throw ValidationError("optim: eps_adam must be positive");
    if (weight_decay < 0) throw ValidationError("optim: weight_decay must be nonnegative");
}

void AdamState::init(std::span<Parameter* const> params) {
    slots.clear();
    slots.reserve(params.size());
    for (const Parameter* p : params)
        slots.push_back(Slot{Tensor(p->value.rows, p->value.cols),
                             Tensor(p->value.rows, p->value.cols)});
    t = 0;
}

double cosine_lr(std::size_t t, std::size_t max_epoch, double lr0) {
    if (max_epoch == 0) throw ValidationError("cosine_lr: max_epoch must be positive");
    if (t > max_epoch) throw ValidationError("cosine_lr: t exceeds max_epoch");
    double frac = static_cast<double>(t) / static_cast<double>(max_epoch);
    return 0.5 * lr0 * (1.0 + std::cos(3.14159265358979323846 * frac));
}

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr_t,
               const OptimConfig& cfg) {
    if (state.slots.size() != params.size())
        throw ValidationError("adam_step: state not initialized for these parameters");
    state.t += 1;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        AdamState::Slot& s = state.slots[i];
        if (!p.grad.same_shape(p.value)) throw ValidationError("adam_step: grad shape mismatch");
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            double g = p.grad.data[k];
            if (cfg.weight_decay != 0.0) p.value.data[k] -= lr_t * cfg.weight_decay * p.value.data[k];
            s.m.data[k] = cfg.beta1 * s.m.data[k] + (1.0 - cfg.beta1) * g;
            s.v.data[k] = cfg.beta2 * s.v.data[k] + (1.0 - cfg.beta2) * g * g;
            double m_hat = s.m.data[k] / bc1;
            double v_hat = s.v.data[k] / bc2;
            p.value.data[k] -= lr_t * m_hat / (std::sqrt(v_hat) + cfg.eps_adam);
        }
    }
}

}  // namespace graphmae

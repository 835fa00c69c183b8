// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "graphmae/tape.hpp"

namespace graphmae {

struct OptimConfig {
    double lr0 = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    double weight_decay = 0.0;
    std::size_t max_epoch = 300;

    void validate() const;
};

// Per-parameter first/second moments; t counts completed steps.
struct AdamState {
    struct Slot {
        Tensor m, v;
    };
    std::vector<Slot> slots;
    std::uint64_t t = 0;

    void init(std::span<Parameter* const> params);
};

// Cosine decay without warmup: lr_t = 0.5 * lr0 * (1 + cos(pi * t / T)).
double cosine_lr(std::size_t t, std::size_t max_epoch, double lr0);

// Decoupled weight decay (p -= lr*wd*p) followed by the bias-corrected
// Adam update. Reads Parameter::grad, writes Parameter::value.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr_t,
               const OptimConfig& cfg);

}  // namespace graphmae

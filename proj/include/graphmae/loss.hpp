// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "graphmae/masking.hpp"
#include "graphmae/tape.hpp"

namespace graphmae {

enum class Criterion { SCE, MSE };

Criterion criterion_from_string(const std::string& s);
std::string to_string(Criterion c);

struct LossConfig {
    Criterion criterion = Criterion::SCE;
    double gamma = 3.0;       // >= 1
    double eps_norm = 1e-12;  // cosine denominator floor
};

// Scaled cosine error over the masked set:
//   mean over i in the plan of (1 - cos(x_i, z_i))^gamma
// with row norms floored at eps_norm, so zero rows yield cos = 0 and a
// per-row loss of 1. gamma == 1 reduces exactly to the plain cosine error.
// Gradients flow through z only; x is data.
NodeId sce_loss(Tape& tape, const Tensor& x, NodeId z, const MaskPlan& plan,
                const LossConfig& cfg);

// mean over masked rows of the per-dimension mean squared error
NodeId mse_loss(Tape& tape, const Tensor& x, NodeId z, const MaskPlan& plan);

// Dispatches on cfg.criterion.
NodeId reconstruction_loss(Tape& tape, const Tensor& x, NodeId z, const MaskPlan& plan,
                           const LossConfig& cfg);

}  // namespace graphmae

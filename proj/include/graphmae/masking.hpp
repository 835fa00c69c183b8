// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "graphmae/rng.hpp"
#include "graphmae/tape.hpp"

namespace graphmae {

struct MaskConfig {
    double mask_ratio = 0.5;
    double replace_rate = 0.0;
    std::uint64_t seed = 0;
};

// The sampled masked node set and its random-substitution assignments.
// substituted[i] receives the raw feature row of donor[i] instead of the
// [MASK] token; all masked nodes (substituted included) are re-masked
// before decoding and count as reconstruction targets.
struct MaskPlan {
    std::vector<std::size_t> masked;       // sorted
    std::vector<std::size_t> substituted;  // sorted subset of masked
    std::vector<std::size_t> donor;        // aligned with substituted

    bool empty() const { return masked.empty(); }
    std::size_t count() const { return masked.size(); }
    // masked minus substituted, sorted: the rows that get the [MASK] token
    std::vector<std::size_t> token_rows() const;
};

// Learnable corruption tokens: x_mask replaces input features of masked
// nodes, h_dmask replaces their latent codes before decoding.
struct MaskTokens {
    Parameter x_mask;   // 1 x d
    Parameter h_dmask;  // 1 x d_h

    MaskTokens() = default;
    MaskTokens(std::size_t feature_dim, std::size_t code_dim, Rng& rng);
};

// Uniform sampling without replacement (partial Fisher-Yates):
// |masked| = floor(mask_ratio * n), |substituted| = floor(replace_rate *
// |masked|), donors uniform over all nodes. Deterministic given cfg.seed.
MaskPlan sample_mask(std::size_t n, const MaskConfig& cfg);

// Builds the corrupted feature matrix X~ on the tape: masked rows get the
// x_mask token (gradient flows into it), substituted rows get their
// donor's raw feature row, everything else is x bit-identical.
NodeId apply_input_mask(Tape& tape, const Tensor& x, const MaskPlan& plan, NodeId x_mask_token);

// Re-mask decoding: every masked row of h (substituted ones included) is
// replaced by the h_dmask token.
NodeId remask(Tape& tape, NodeId h, const MaskPlan& plan, NodeId h_dmask_token);

}  // namespace graphmae

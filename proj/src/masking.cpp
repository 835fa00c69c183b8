// SPDX-License-Identifier: Apache-2.0

#include "graphmae/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graphmae/errors.hpp"

namespace graphmae {

std::vector<std::size_t> MaskPlan::token_rows() const {
    std::vector<std::size_t> out;
    out.reserve(masked.size() - substituted.size());
    std::set_difference(masked.begin(), masked.end(), substituted.begin(), substituted.end(),
                        std::back_inserter(out));
    return out;
}

MaskTokens::MaskTokens(std::size_t feature_dim, std::size_t code_dim, Rng& rng)
    : x_mask("mask.x_mask", Tensor(1, feature_dim)),
      h_dmask("mask.h_dmask", Tensor(1, code_dim)) {
    for (double& v : x_mask.value.data) v = 0.02 * rng.normal();
    for (double& v : h_dmask.value.data) v = 0.02 * rng.normal();
}

MaskPlan sample_mask(std::size_t n, const MaskConfig& cfg) {
    if (n == 0) throw ValidationError("sample_mask: empty graph");
    if (cfg.mask_ratio < 0 || cfg.mask_ratio > 1)
        throw ValidationError("mask_ratio must lie in [0,1]");
    if (cfg.replace_rate < 0 || cfg.replace_rate > 1)
        throw ValidationError("replace_rate must lie in [0,1]");

    auto m = static_cast<std::size_t>(std::floor(cfg.mask_ratio * static_cast<double>(n)));
    Rng rng(Rng::mix(cfg.seed, 4));

    // partial Fisher-Yates: the first m entries are the sample
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 0; i < m; ++i)
        std::swap(perm[i], perm[i + rng.uniform_int(n - i)]);

    MaskPlan plan;
    plan.masked.assign(perm.begin(), perm.begin() + m);
    std::sort(plan.masked.begin(), plan.masked.end());

    auto k = static_cast<std::size_t>(std::floor(cfg.replace_rate * static_cast<double>(m)));
    if (k > 0) {
        std::vector<std::size_t> pool = plan.masked;
        for (std::size_t i = 0; i < k; ++i)
            std::swap(pool[i], pool[i + rng.uniform_int(m - i)]);
        plan.substituted.assign(pool.begin(), pool.begin() + k);
        std::sort(plan.substituted.begin(), plan.substituted.end());
        plan.donor.reserve(k);
        for (std::size_t i = 0; i < k; ++i) plan.donor.push_back(rng.uniform_int(n));
    }
    return plan;
}

namespace {

void check_plan_range(const MaskPlan& plan, std::size_t n, const char* what) {
    for (std::size_t i : plan.masked)
        if (i >= n) throw ValidationError(std::string(what) + ": masked index out of range");
    for (std::size_t i : plan.donor)
        if (i >= n) throw ValidationError(std::string(what) + ": donor index out of range");
}

}  // namespace

NodeId apply_input_mask(Tape& tape, const Tensor& x, const MaskPlan& plan, NodeId x_mask_token) {
    check_plan_range(plan, x.rows, "apply_input_mask");
    // donor substitutions are data, not gradient paths: bake them into the base
    Tensor base = x;
    for (std::size_t i = 0; i < plan.substituted.size(); ++i) {
        auto src = x.row(plan.donor[i]);
        std::copy(src.begin(), src.end(), base.row(plan.substituted[i]).begin());
    }
    return tape.overwrite_rows_with_token(tape.constant(std::move(base)), x_mask_token,
                                          plan.token_rows());
}

NodeId remask(Tape& tape, NodeId h, const MaskPlan& plan, NodeId h_dmask_token) {
    check_plan_range(plan, tape.value(h).rows, "remask");
    return tape.overwrite_rows_with_token(h, h_dmask_token, plan.masked);
}

}  // namespace graphmae

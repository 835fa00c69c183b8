// SPDX-License-Identifier: Apache-2.0

#include "graphmae/loss.hpp"

#include "graphmae/errors.hpp"

namespace graphmae {

Criterion criterion_from_string(const std::string& s) {
    if (s == "sce") return Criterion::SCE;
    if (s == "mse") return Criterion::MSE;
    throw ValidationError("unknown criterion: " + s);
}

std::string to_string(Criterion c) { return c == Criterion::SCE ? "sce" : "mse"; }

namespace {

void check_loss_inputs(const Tensor& x, const Tensor& z, const MaskPlan& plan) {
    ensure_same_shape(x, z, "reconstruction loss");
    if (plan.empty())
        throw ValidationError("loss undefined over an empty mask plan");
    for (std::size_t i : plan.masked)
        if (i >= x.rows) throw ValidationError("loss: masked index out of range");
}

}  // namespace

NodeId sce_loss(Tape& tape, const Tensor& x, NodeId z, const MaskPlan& plan,
                const LossConfig& cfg) {
    check_loss_inputs(x, tape.value(z), plan);
    if (cfg.gamma < 1.0) throw ValidationError("sce: gamma must be >= 1");
    if (cfg.eps_norm <= 0.0) throw ValidationError("sce: eps_norm must be positive");

    NodeId xs = tape.gather_rows(tape.constant(x), plan.masked);
    NodeId zs = tape.gather_rows(z, plan.masked);
    NodeId dots = tape.row_sum(tape.mul(xs, zs));
    NodeId denom = tape.mul(tape.l2_norm_rows(xs, cfg.eps_norm),
                            tape.l2_norm_rows(zs, cfg.eps_norm));
    NodeId cosine = tape.mul(dots, tape.power(denom, -1.0));
    Tensor ones(plan.count(), 1);
    ones.fill(1.0);
    NodeId err = tape.sub(tape.constant(std::move(ones)), cosine);
    // rounding can push cos a hair above 1; clamp the error at 0 (relu)
    err = tape.leaky_relu(err, 0.0);
    return tape.mean_all(tape.power(err, cfg.gamma));
}

NodeId mse_loss(Tape& tape, const Tensor& x, NodeId z, const MaskPlan& plan) {
    check_loss_inputs(x, tape.value(z), plan);
    NodeId xs = tape.gather_rows(tape.constant(x), plan.masked);
    NodeId zs = tape.gather_rows(z, plan.masked);
    NodeId diff = tape.sub(xs, zs);
    return tape.mean_all(tape.mul(diff, diff));
}

NodeId reconstruction_loss(Tape& tape, const Tensor& x, NodeId z, const MaskPlan& plan,
                           const LossConfig& cfg) {
    return cfg.criterion == Criterion::SCE ? sce_loss(tape, x, z, plan, cfg)
                                           : mse_loss(tape, x, z, plan);
}

}  // namespace graphmae

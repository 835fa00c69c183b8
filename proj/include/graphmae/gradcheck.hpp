// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "graphmae/tape.hpp"

namespace graphmae {

struct GradCheckResult {
    std::string name;
    double max_rel_err = 0.0;
    double threshold = 0.0;
    bool pass() const { return max_rel_err < threshold; }
};

// One differentiable scenario. `state` owns whatever fixture the recorder
// needs (parameters, graphs, whole models); `params` points at the
// parameters under test inside that state; `record` replays the forward
// pass from their current values on a fresh tape and returns the loss node.
struct GradCheckScenario {
    std::string name;
    double threshold = 1e-5;
    std::shared_ptr<void> state;
    std::vector<Parameter*> params;
    std::function<NodeId(Tape&)> record;
};

// Central finite differences (h = 1e-6) against one analytic
// forward+backward; reports max over elements of
// |analytic - fd| / (|fd| + 1e-8). The FD side only ever evaluates the
// forward pass, so it is independent of every backward implementation.
// `corrupt_analytic` deliberately perturbs the analytic gradients; it
// exists so tests can prove a broken backward is caught.
GradCheckResult run_scenario(GradCheckScenario& scenario, bool corrupt_analytic = false);

// The registered suite: every tensor op, every layer kind, both losses,
// and an end-to-end masked-autoencoder pass on a 12-node graph.
std::vector<GradCheckResult> run_gradcheck(bool corrupt_analytic = false);

void write_gradcheck_csv(const std::vector<GradCheckResult>& results, const std::string& path);

}  // namespace graphmae

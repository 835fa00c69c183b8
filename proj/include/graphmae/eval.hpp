// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphmae/graph.hpp"
#include "graphmae/layers.hpp"

namespace graphmae {

enum class Pooling { Mean, Max, Sum };

Pooling pooling_from_string(const std::string& s);
std::string to_string(Pooling p);

struct ProbeConfig {
    double lr = 0.01;
    std::size_t epochs = 300;
    double weight_decay = 1e-4;
    std::size_t repeats = 20;  // node protocol; graph protocol defaults to 5

    void validate() const;
};

struct EvalReport {
    std::string task;                       // "node_probe" | "graph_kfold"
    std::string classifier = "linear_probe";
    double mean = 0.0;
    double stdev = 0.0;                     // population std over values
    std::vector<double> values;
    std::vector<std::size_t> fold_of;       // graph protocol: fold index per graph
    ProbeConfig config;

    std::string to_json() const;
    void recompute_stats();
};

// H = f_E(A, X) on the uncorrupted graph; identical to the training
// pipeline with an empty mask plan. Never mutates the encoder.
Tensor embed(const Model& encoder, const Graph& g);

// Columnwise pooling over node rows -> 1 x d_h.
Tensor readout(const Tensor& h, Pooling pooling);

// Multinomial logistic regression on frozen embeddings, trained with Adam
// on train_idx, accuracy on test_idx, repeated with distinct seeds.
EvalReport linear_probe(const Tensor& h, const std::vector<int>& labels, const NodeSplit& split,
                        const ProbeConfig& cfg, std::uint64_t seed);

// Stratified k-fold over pooled graph embeddings; k*repeats accuracies.
EvalReport kfold_graph_eval(const GraphSet& gs, const Model& encoder, Pooling pooling,
                            std::size_t k, std::size_t repeats, const ProbeConfig& cfg,
                            std::uint64_t seed);

}  // namespace graphmae

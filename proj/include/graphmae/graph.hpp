// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphmae/csr.hpp"
#include "graphmae/tensor.hpp"

namespace graphmae {

// A single graph: symmetric adjacency, dense node features, optional node
// labels, optional graph-level label.
struct Graph {
    std::size_t n = 0;
    CsrAdjacency adjacency;
    Tensor features;                // n x d
    std::vector<int> node_labels;   // empty when absent, else length n
    std::optional<int> graph_label;
    std::string name;

    std::size_t feature_dim() const { return features.cols; }
    bool has_node_labels() const { return !node_labels.empty(); }
    int num_node_classes() const;

    // Validates the type invariants; throws ValidationError.
    void check() const;
};

struct NodeSplit {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> val_idx;
    std::vector<std::size_t> test_idx;
};

struct GraphSet {
    std::vector<Graph> graphs;
    int num_classes = 0;

    std::size_t size() const { return graphs.size(); }
    std::size_t feature_dim() const { return graphs.empty() ? 0 : graphs[0].feature_dim(); }
    void check() const;
};

// --- file ingestion ------------------------------------------------------

// Edge file: `src dst` per line, 0-based, '#' comments. Feature file: CSV of
// reals or binary "GMAEF1". Label file: one integer per line.
Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path = "");

// Writes edges (one direction per undirected pair), features (binary), and
// labels when present, using load_graph's formats.
void save_graph(const Graph& g, const std::string& edge_path, const std::string& feature_path,
                const std::string& label_path = "");

Tensor load_features(const std::string& path);
void save_features_binary(const Tensor& features, const std::string& path);

// Directory of per-graph subdirectories plus a `labels.txt` manifest
// (`graph_name label` per line). Each subdirectory holds edges.txt and
// features.csv or features.bin.
GraphSet load_graph_set(const std::string& dir);
void save_graph_set(const GraphSet& gs, const std::string& dir);

// --- transforms ----------------------------------------------------------

// Unit-L2 feature rows; all-zero rows stay zero.
Graph row_normalize_features(const Graph& g);

// Disjoint union for mini-batch training: block-diagonal adjacency and
// vertically stacked features. Labels are dropped.
Graph merge_block_diagonal(const std::vector<const Graph*>& graphs);

// --- synthetic data ------------------------------------------------------

struct SbmFeatureSpec {
    std::size_t dim = 16;
    double mean_scale = 1.0;   // block means drawn N(0, mean_scale^2 I)
    double noise_sigma = 0.1;  // isotropic per-node noise
};

// Undirected stochastic block model with planted block-mean features;
// labels are block ids. Deterministic given seed.
Graph generate_sbm(const std::vector<std::size_t>& blocks, double p_in, double p_out,
                   const SbmFeatureSpec& feature_spec, std::uint64_t seed);

struct SplitFractions {
    double train = 0.1;
    double val = 0.1;
    double test = 0.8;
};

// Stratified by label when labels exist; floor-per-class counts,
// deterministic given seed.
NodeSplit split_nodes(const Graph& g, const SplitFractions& fractions, std::uint64_t seed);

}  // namespace graphmae

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "graphmae/csr.hpp"
#include "graphmae/graph.hpp"
#include "graphmae/rng.hpp"
#include "graphmae/tape.hpp"

namespace graphmae {

enum class LayerKind { GCN, GAT, GIN, MLP };
enum class Activation { PReLU, Identity };

LayerKind layer_kind_from_string(const std::string& s);
std::string to_string(LayerKind kind);

struct LayerConfig {
    LayerKind kind = LayerKind::GAT;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;  // per-head for GAT
    std::size_t heads = 1;
    bool concat_heads = true;     // GAT hidden layers concat, output layer averages
    double negative_slope = 0.2;  // GAT attention LeakyReLU
    bool gin_eps_learnable = true;
    Activation activation = Activation::PReLU;

    std::size_t output_dim() const {
        return (kind == LayerKind::GAT && concat_heads) ? heads * out_dim : out_dim;
    }
};

// One layer and its parameters. Parameter layout per kind:
//   GCN: W
//   GAT: per head {W, a_src, a_dst}
//   GIN: eps (when learnable), W1, b1, mlp_slope, W2, b2
//   MLP: W, b
// plus a trailing per-channel PReLU slope when activation == PReLU.
struct Layer {
    LayerConfig cfg;
    std::vector<Parameter> params;
};

enum class ModelRole { Encoder, Decoder };

struct Model {
    ModelRole role = ModelRole::Encoder;
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().cfg.in_dim; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().cfg.output_dim(); }
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
};

// The adjacency variants the layer kinds consume. Self-contained copies,
// must outlive any tape that records ops against them.
struct PreparedGraph {
    CsrAdjacency raw;         // as stored in the Graph, no self-loops added
    CsrAdjacency with_loops;  // raw + (i,i) arcs
    CsrAdjacency normalized;  // gcn_normalize(with_loops)

    static PreparedGraph from(const CsrAdjacency& adj);
};

// Stack builder. For GAT, hidden layers use `heads` heads concatenated
// (hidden_dim must divide evenly) and the last layer a single averaged
// head. Decoders end with an identity activation so reconstructions can
// take any sign.
Model build_model(ModelRole role, LayerKind kind, std::size_t num_layers, std::size_t in_dim,
                  std::size_t hidden_dim, std::size_t out_dim, std::size_t heads,
                  double negative_slope, Rng& init_rng);

// One layer from an explicit config; parameter ids get `prefix.` prepended.
Layer make_layer(const LayerConfig& cfg, const std::string& prefix, Rng& init_rng);

// A model from explicit per-layer configs (checkpoint loading path).
Model model_from_configs(ModelRole role, const std::vector<LayerConfig>& configs, Rng& init_rng);

// Records one layer's forward pass. `frozen` mounts parameters as
// constants (inference); otherwise they are watched for gradients.
NodeId layer_forward(Tape& tape, Layer& layer, const PreparedGraph& pg, NodeId h, bool frozen);

// Full stack; 0-layer models pass x through unchanged.
NodeId model_forward(Tape& tape, Model& model, const PreparedGraph& pg, NodeId x, bool frozen);

// H = f_E(A, X) with parameters live on the tape.
NodeId encode(Tape& tape, Model& encoder, const PreparedGraph& pg, NodeId x);

// Z = f_D(A, H~). MLP decoders ignore the adjacency.
NodeId decode(Tape& tape, Model& decoder, const PreparedGraph& pg, NodeId h);

// Frozen forward pass outside any training tape (parameters untouched).
Tensor forward_frozen(const Model& model, const PreparedGraph& pg, const Tensor& x);

}  // namespace graphmae

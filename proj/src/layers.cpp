// SPDX-License-Identifier: Apache-2.0

#include "graphmae/layers.hpp"

#include <cmath>

#include "graphmae/errors.hpp"

namespace graphmae {

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "gcn") return LayerKind::GCN;
    if (s == "gat") return LayerKind::GAT;
    if (s == "gin") return LayerKind::GIN;
    if (s == "mlp") return LayerKind::MLP;
    throw ValidationError("unknown layer kind: " + s);
}

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::GCN: return "gcn";
        case LayerKind::GAT: return "gat";
        case LayerKind::GIN: return "gin";
        case LayerKind::MLP: return "mlp";
    }
    return "?";
}

std::vector<Parameter*> Model::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers)
        for (auto& p : l.params) out.push_back(&p);
    return out;
}

std::vector<const Parameter*> Model::parameters() const {
    std::vector<const Parameter*> out;
    for (const auto& l : layers)
        for (const auto& p : l.params) out.push_back(&p);
    return out;
}

PreparedGraph PreparedGraph::from(const CsrAdjacency& adj) {
    PreparedGraph pg;
    pg.raw = adj;
    pg.with_loops = add_self_loops(adj);
    pg.normalized = gcn_normalize(pg.with_loops);
    return pg;
}

namespace {

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    Tensor w(fan_in, fan_out);
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.data) v = a * (2.0 * rng.uniform() - 1.0);
    return w;
}

Tensor filled(std::size_t rows, std::size_t cols, double v) {
    Tensor t(rows, cols);
    t.fill(v);
    return t;
}

}  // namespace

Layer make_layer(const LayerConfig& cfg, const std::string& prefix, Rng& rng) {
    Layer layer;
    layer.cfg = cfg;
    auto add = [&](const std::string& name, Tensor t) {
        layer.params.emplace_back(prefix + "." + name, std::move(t));
    };
    switch (cfg.kind) {
        case LayerKind::GCN:
            add("W", xavier_uniform(cfg.in_dim, cfg.out_dim, rng));
            break;
        case LayerKind::GAT:
            for (std::size_t h = 0; h < cfg.heads; ++h) {
                std::string hp = "h" + std::to_string(h);
                add(hp + ".W", xavier_uniform(cfg.in_dim, cfg.out_dim, rng));
                add(hp + ".a_src", Tensor(cfg.out_dim, 1));  // zero-init attention
                add(hp + ".a_dst", Tensor(cfg.out_dim, 1));
            }
            break;
        case LayerKind::GIN:
            if (cfg.gin_eps_learnable) add("eps", Tensor(1, 1));
            add("W1", xavier_uniform(cfg.in_dim, cfg.out_dim, rng));
            add("b1", Tensor(1, cfg.out_dim));
            add("mlp_slope", filled(1, cfg.out_dim, 0.25));
            add("W2", xavier_uniform(cfg.out_dim, cfg.out_dim, rng));
            add("b2", Tensor(1, cfg.out_dim));
            break;
        case LayerKind::MLP:
            add("W", xavier_uniform(cfg.in_dim, cfg.out_dim, rng));
            add("b", Tensor(1, cfg.out_dim));
            break;
    }
    if (cfg.activation == Activation::PReLU)
        add("prelu", filled(1, cfg.output_dim(), 0.25));
    return layer;
}

Model model_from_configs(ModelRole role, const std::vector<LayerConfig>& configs, Rng& rng) {
    Model m;
    m.role = role;
    std::string prefix = role == ModelRole::Encoder ? "enc" : "dec";
    for (std::size_t i = 0; i < configs.size(); ++i) {
        if (i > 0 && configs[i].in_dim != configs[i - 1].output_dim())
            throw ValidationError("model_from_configs: layer " + std::to_string(i) +
                                  " input dim does not match previous output");
        m.layers.push_back(make_layer(configs[i], prefix + ".l" + std::to_string(i), rng));
    }
    return m;
}

Model build_model(ModelRole role, LayerKind kind, std::size_t num_layers, std::size_t in_dim,
                  std::size_t hidden_dim, std::size_t out_dim, std::size_t heads,
                  double negative_slope, Rng& init_rng) {
    if (heads == 0) throw ValidationError("build_model: heads must be >= 1");
    Model m;
    m.role = role;
    std::string prefix = role == ModelRole::Encoder ? "enc" : "dec";
    for (std::size_t i = 0; i < num_layers; ++i) {
        bool last = i + 1 == num_layers;
        LayerConfig cfg;
        cfg.kind = kind;
        cfg.negative_slope = negative_slope;
        cfg.in_dim = i == 0 ? in_dim : hidden_dim;
        std::size_t layer_out = last ? out_dim : hidden_dim;
        if (kind == LayerKind::GAT && !last) {
            if (layer_out % heads != 0)
                throw ValidationError("hidden dim " + std::to_string(layer_out) +
                                      " not divisible by " + std::to_string(heads) + " heads");
            cfg.heads = heads;
            cfg.out_dim = layer_out / heads;
            cfg.concat_heads = true;
        } else {
            cfg.heads = kind == LayerKind::GAT ? 1 : cfg.heads;
            cfg.out_dim = layer_out;
            cfg.concat_heads = false;
        }
        // decoders end activation-free so outputs can take any sign
        cfg.activation = (last && role == ModelRole::Decoder) ? Activation::Identity
                                                              : Activation::PReLU;
        m.layers.push_back(make_layer(cfg, prefix + ".l" + std::to_string(i), init_rng));
    }
    return m;
}

namespace {

NodeId mount(Tape& tape, Parameter& p, bool frozen) {
    return frozen ? tape.constant(p.value) : tape.watch(p);
}

// activation comes last; param index points at the trailing prelu slope
NodeId apply_activation(Tape& tape, Layer& layer, NodeId x, bool frozen) {
    if (layer.cfg.activation == Activation::Identity) return x;
    NodeId slope = mount(tape, layer.params.back(), frozen);
    return tape.prelu(x, slope);
}

NodeId gcn_forward(Tape& tape, Layer& layer, const PreparedGraph& pg, NodeId h, bool frozen) {
    NodeId w = mount(tape, layer.params[0], frozen);
    NodeId agg = tape.spmm(pg.normalized, h);
    return tape.matmul(agg, w);
}

NodeId gat_forward(Tape& tape, Layer& layer, const PreparedGraph& pg, NodeId h, bool frozen) {
    const CsrAdjacency& adj = pg.with_loops;
    std::vector<NodeId> head_outputs;
    for (std::size_t hd = 0; hd < layer.cfg.heads; ++hd) {
        NodeId w = mount(tape, layer.params[3 * hd + 0], frozen);
        NodeId a_src = mount(tape, layer.params[3 * hd + 1], frozen);
        NodeId a_dst = mount(tape, layer.params[3 * hd + 2], frozen);
        NodeId hw = tape.matmul(h, w);
        NodeId s_src = tape.matmul(hw, a_src);  // n x 1, pairs with the destination node
        NodeId s_dst = tape.matmul(hw, a_dst);  // n x 1, pairs with the neighbor
        NodeId logits = tape.arc_scores(s_src, s_dst, adj);
        logits = tape.leaky_relu(logits, layer.cfg.negative_slope);
        NodeId alpha = tape.segment_softmax(logits, adj);
        head_outputs.push_back(tape.spmm_arc_weighted(alpha, adj, hw));
    }
    NodeId combined = head_outputs[0];
    if (layer.cfg.concat_heads) {
        for (std::size_t i = 1; i < head_outputs.size(); ++i)
            combined = tape.concat_cols(combined, head_outputs[i]);
    } else if (head_outputs.size() > 1) {
        for (std::size_t i = 1; i < head_outputs.size(); ++i)
            combined = tape.add(combined, head_outputs[i]);
        combined = tape.scalar_mul(combined, 1.0 / static_cast<double>(head_outputs.size()));
    }
    return combined;
}

NodeId gin_forward(Tape& tape, Layer& layer, const PreparedGraph& pg, NodeId h, bool frozen) {
    std::size_t p = 0;
    NodeId agg = tape.spmm(pg.raw, h);
    NodeId self;
    if (layer.cfg.gin_eps_learnable) {
        NodeId eps = mount(tape, layer.params[p++], frozen);
        NodeId one = tape.constant(Tensor::from_rows({{1.0}}));
        self = tape.mul_scalar_node(h, tape.add(one, eps));
    } else {
        self = h;  // fixed eps = 0
    }
    NodeId x = tape.add(self, agg);
    NodeId w1 = mount(tape, layer.params[p++], frozen);
    NodeId b1 = mount(tape, layer.params[p++], frozen);
    NodeId slope = mount(tape, layer.params[p++], frozen);
    NodeId w2 = mount(tape, layer.params[p++], frozen);
    NodeId b2 = mount(tape, layer.params[p++], frozen);
    NodeId hidden = tape.prelu(tape.add(tape.matmul(x, w1), b1), slope);
    return tape.add(tape.matmul(hidden, w2), b2);
}

NodeId mlp_forward(Tape& tape, Layer& layer, NodeId h, bool frozen) {
    NodeId w = mount(tape, layer.params[0], frozen);
    NodeId b = mount(tape, layer.params[1], frozen);
    return tape.add(tape.matmul(h, w), b);
}

}  // namespace

NodeId layer_forward(Tape& tape, Layer& layer, const PreparedGraph& pg, NodeId h, bool frozen) {
    if (tape.value(h).cols != layer.cfg.in_dim)
        throw ValidationError("layer expects " + std::to_string(layer.cfg.in_dim) +
                              " input columns, got " + std::to_string(tape.value(h).cols));
    NodeId out = h;
    switch (layer.cfg.kind) {
        case LayerKind::GCN: out = gcn_forward(tape, layer, pg, h, frozen); break;
        case LayerKind::GAT: out = gat_forward(tape, layer, pg, h, frozen); break;
        case LayerKind::GIN: out = gin_forward(tape, layer, pg, h, frozen); break;
        case LayerKind::MLP: out = mlp_forward(tape, layer, h, frozen); break;
    }
    return apply_activation(tape, layer, out, frozen);
}

NodeId model_forward(Tape& tape, Model& model, const PreparedGraph& pg, NodeId x, bool frozen) {
    NodeId h = x;
    for (auto& layer : model.layers) h = layer_forward(tape, layer, pg, h, frozen);
    return h;
}

NodeId encode(Tape& tape, Model& encoder, const PreparedGraph& pg, NodeId x) {
    if (encoder.role != ModelRole::Encoder) throw ValidationError("encode: model is not an encoder");
    return model_forward(tape, encoder, pg, x, /*frozen=*/false);
}

NodeId decode(Tape& tape, Model& decoder, const PreparedGraph& pg, NodeId h) {
    if (decoder.role != ModelRole::Decoder) throw ValidationError("decode: model is not a decoder");
    return model_forward(tape, decoder, pg, h, /*frozen=*/false);
}

Tensor forward_frozen(const Model& model, const PreparedGraph& pg, const Tensor& x) {
    Tape tape;
    // frozen mounts use constants only; parameters are never written
    auto& mutable_model = const_cast<Model&>(model);
    NodeId out = model_forward(tape, mutable_model, pg, tape.constant(x), /*frozen=*/true);
    return tape.value(out);
}

}  // namespace graphmae

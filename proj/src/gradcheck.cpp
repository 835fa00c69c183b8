// SPDX-License-Identifier: Apache-2.0

#include "graphmae/gradcheck.hpp"

#include <cmath>
#include <cstdio>

#include "graphmae/csr.hpp"
#include "graphmae/errors.hpp"
#include "graphmae/graph.hpp"
#include "graphmae/io.hpp"
#include "graphmae/layers.hpp"
#include "graphmae/loss.hpp"
#include "graphmae/masking.hpp"
#include "graphmae/rng.hpp"
#include "graphmae/train.hpp"

namespace graphmae {

GradCheckResult run_scenario(GradCheckScenario& sc, bool corrupt_analytic) {
    constexpr double kStep = 1e-6;

    for (Parameter* p : sc.params) p->zero_grad();
    {
        Tape tape;
        tape.backward(sc.record(tape));
    }
    std::vector<Tensor> analytic;
    for (const Parameter* p : sc.params) analytic.push_back(p->grad);
    if (corrupt_analytic && !analytic.empty() && analytic[0].size() > 0)
        analytic[0].data[0] += 0.01 * (1.0 + std::abs(analytic[0].data[0]));

    auto eval = [&]() {
        Tape tape;
        return tape.value(sc.record(tape)).scalar();
    };

    GradCheckResult result{sc.name, 0.0, sc.threshold};
    for (std::size_t pi = 0; pi < sc.params.size(); ++pi) {
        Tensor& v = sc.params[pi]->value;
        for (std::size_t k = 0; k < v.size(); ++k) {
            double saved = v.data[k];
            v.data[k] = saved + kStep;
            double up = eval();
            v.data[k] = saved - kStep;
            double down = eval();
            v.data[k] = saved;
            double fd = (up - down) / (2.0 * kStep);
            double rel = std::abs(analytic[pi].data[k] - fd) / (std::abs(fd) + 1e-8);
            result.max_rel_err = std::max(result.max_rel_err, rel);
        }
    }
    return result;
}

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double margin = 0.0) {
    Tensor t(rows, cols);
    for (double& v : t.data) {
        double x = 2.0 * rng.uniform() - 1.0;  // [-1, 1]
        if (margin > 0.0) x = (x >= 0 ? 1.0 : -1.0) * (margin + (1.0 - margin) * std::abs(x));
        v = x;
    }
    return t;
}

Tensor positive_tensor(std::size_t rows, std::size_t cols, Rng& rng, double lo = 0.1) {
    Tensor t(rows, cols);
    for (double& v : t.data) v = lo + rng.uniform();
    return t;
}

CsrAdjacency random_graph(std::size_t n, double p, Rng& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.uniform() < p) edges.emplace_back(i, j);
    return csr_from_undirected_edges(n, edges);
}

// loss = sum(out .* weights) so every output element carries a distinct
// gradient; catches transposed or misindexed backward rules
NodeId weighted_sum(Tape& t, NodeId out, std::uint64_t seed) {
    const Tensor& v = t.value(out);
    Rng rng(seed);
    Tensor w(v.rows, v.cols);
    for (double& x : w.data) x = 0.25 + rng.uniform();
    return t.sum_all(t.mul(out, t.constant(std::move(w))));
}

// --- plain tensor-op scenarios ---------------------------------------------

struct OpState {
    std::vector<Parameter> params;
    CsrAdjacency adj;  // used by the sparse primitives
};

GradCheckScenario op_scenario(std::string name, std::vector<Tensor> inputs,
                              std::function<NodeId(Tape&, OpState&)> rec,
                              double threshold = 1e-5) {
    auto state = std::make_shared<OpState>();
    for (std::size_t i = 0; i < inputs.size(); ++i)
        state->params.emplace_back("p" + std::to_string(i), std::move(inputs[i]));
    GradCheckScenario sc;
    sc.name = std::move(name);
    sc.threshold = threshold;
    sc.state = state;
    for (auto& p : state->params) sc.params.push_back(&p);
    sc.record = [state, rec](Tape& t) { return rec(t, *state); };
    return sc;
}

void add_op_scenarios(std::vector<GradCheckScenario>& out) {
    Rng r(40);

    out.push_back(op_scenario("op.matmul", {random_tensor(4, 3, r), random_tensor(3, 5, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.matmul(t.watch(s.params[0]), t.watch(s.params[1])), 1);
                              }));
    out.push_back(op_scenario("op.transpose", {random_tensor(4, 3, r)}, [](Tape& t, OpState& s) {
        return weighted_sum(t, t.transpose(t.watch(s.params[0])), 2);
    }));
    out.push_back(op_scenario("op.add", {random_tensor(4, 3, r), random_tensor(4, 3, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.add(t.watch(s.params[0]), t.watch(s.params[1])), 3);
                              }));
    out.push_back(op_scenario("op.add_row_broadcast",
                              {random_tensor(4, 3, r), random_tensor(1, 3, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.add(t.watch(s.params[0]), t.watch(s.params[1])), 4);
                              }));
    out.push_back(op_scenario("op.mul", {random_tensor(4, 3, r), random_tensor(4, 3, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.mul(t.watch(s.params[0]), t.watch(s.params[1])), 5);
                              }));
    out.push_back(op_scenario("op.scalar_mul", {random_tensor(4, 3, r)}, [](Tape& t, OpState& s) {
        return weighted_sum(t, t.scalar_mul(t.watch(s.params[0]), -1.7), 6);
    }));
    out.push_back(op_scenario("op.mul_scalar_node",
                              {random_tensor(4, 3, r), random_tensor(1, 1, r, 0.2)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.mul_scalar_node(t.watch(s.params[0]), t.watch(s.params[1])),
                                      7);
                              }));
    out.push_back(op_scenario("op.concat_cols", {random_tensor(4, 2, r), random_tensor(4, 3, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.concat_cols(t.watch(s.params[0]), t.watch(s.params[1])),
                                      8);
                              }));
    out.push_back(op_scenario("op.gather_rows", {random_tensor(5, 3, r)}, [](Tape& t, OpState& s) {
        // duplicated index exercises gradient accumulation
        return weighted_sum(t, t.gather_rows(t.watch(s.params[0]), {0, 2, 2, 4}), 9);
    }));
    out.push_back(op_scenario("op.scatter_rows", {random_tensor(3, 4, r)}, [](Tape& t, OpState& s) {
        return weighted_sum(t, t.scatter_rows(t.watch(s.params[0]), {4, 0, 2}, 6), 10);
    }));
    out.push_back(op_scenario("op.sum_all", {random_tensor(4, 3, r)}, [](Tape& t, OpState& s) {
        return t.sum_all(t.watch(s.params[0]));
    }));
    out.push_back(op_scenario("op.mean_all", {random_tensor(4, 3, r)}, [](Tape& t, OpState& s) {
        return t.mean_all(t.watch(s.params[0]));
    }));
    out.push_back(op_scenario("op.row_sum", {random_tensor(4, 3, r)}, [](Tape& t, OpState& s) {
        return weighted_sum(t, t.row_sum(t.watch(s.params[0])), 11);
    }));
    out.push_back(op_scenario("op.power_fractional", {positive_tensor(4, 3, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(t, t.power(t.watch(s.params[0]), 2.5), 12);
                              }));
    out.push_back(op_scenario("op.power_cubed", {random_tensor(4, 3, r, 0.1)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(t, t.power(t.watch(s.params[0]), 3.0), 13);
                              }));
    out.push_back(op_scenario("op.power_reciprocal", {positive_tensor(4, 3, r, 0.3)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(t, t.power(t.watch(s.params[0]), -1.0), 14);
                              }));
    out.push_back(op_scenario("op.leaky_relu", {random_tensor(4, 3, r, 0.05)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(t, t.leaky_relu(t.watch(s.params[0]), 0.2),
                                                      15);
                              }));
    out.push_back(op_scenario("op.prelu",
                              {random_tensor(4, 3, r, 0.05), positive_tensor(1, 3, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.prelu(t.watch(s.params[0]), t.watch(s.params[1])), 16);
                              }));
    out.push_back(op_scenario("op.prelu_shared",
                              {random_tensor(4, 3, r, 0.05), positive_tensor(1, 1, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.prelu(t.watch(s.params[0]), t.watch(s.params[1])), 17);
                              }));
    out.push_back(op_scenario("op.exp", {random_tensor(4, 3, r)}, [](Tape& t, OpState& s) {
        return weighted_sum(t, t.exp(t.watch(s.params[0])), 18);
    }));
    out.push_back(op_scenario("op.log", {positive_tensor(4, 3, r, 0.2)}, [](Tape& t, OpState& s) {
        return weighted_sum(t, t.log(t.watch(s.params[0])), 19);
    }));
    out.push_back(op_scenario("op.l2_norm_rows", {random_tensor(4, 3, r, 0.1)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.l2_norm_rows(t.watch(s.params[0]), 1e-12), 20);
                              }));
    out.push_back(op_scenario("op.softmax_cross_entropy", {random_tensor(6, 4, r)},
                              [](Tape& t, OpState& s) {
                                  return t.softmax_cross_entropy(t.watch(s.params[0]),
                                                                 {0, 3, 1, 2, 3, 0});
                              }));
    out.push_back(op_scenario("op.overwrite_rows",
                              {random_tensor(6, 4, r), random_tensor(1, 4, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t,
                                      t.overwrite_rows_with_token(t.watch(s.params[0]),
                                                                  t.watch(s.params[1]), {1, 3, 4}),
                                      21);
                              }));

    // sparse primitives share an 8-node fixture with self-loops
    Rng gr(41);
    CsrAdjacency adj = add_self_loops(random_graph(8, 0.4, gr));
    {
        auto sc = op_scenario("op.spmm", {random_tensor(8, 4, r)}, [](Tape& t, OpState& s) {
            return weighted_sum(t, t.spmm(s.adj, t.watch(s.params[0])), 22);
        });
        static_cast<OpState*>(sc.state.get())->adj = adj;
        out.push_back(std::move(sc));
    }
    {
        auto sc = op_scenario("op.arc_scores", {random_tensor(8, 1, r), random_tensor(8, 1, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.arc_scores(t.watch(s.params[0]), t.watch(s.params[1]),
                                                      s.adj),
                                      23);
                              });
        static_cast<OpState*>(sc.state.get())->adj = adj;
        out.push_back(std::move(sc));
    }
    {
        auto sc = op_scenario("op.segment_softmax", {random_tensor(adj.nnz(), 1, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t, t.segment_softmax(t.watch(s.params[0]), s.adj), 24);
                              });
        static_cast<OpState*>(sc.state.get())->adj = adj;
        out.push_back(std::move(sc));
    }
    {
        auto sc = op_scenario("op.spmm_arc_weighted",
                              {random_tensor(adj.nnz(), 1, r), random_tensor(8, 4, r)},
                              [](Tape& t, OpState& s) {
                                  return weighted_sum(
                                      t,
                                      t.spmm_arc_weighted(t.watch(s.params[0]), s.adj,
                                                          t.watch(s.params[1])),
                                      25);
                              });
        static_cast<OpState*>(sc.state.get())->adj = adj;
        out.push_back(std::move(sc));
    }
}

// --- layer scenarios ---------------------------------------------------------

struct LayerState {
    PreparedGraph pg;
    Layer layer;
    Parameter x;
};

GradCheckScenario layer_scenario(std::string name, LayerKind kind, bool concat_heads,
                                 std::uint64_t seed) {
    auto state = std::make_shared<LayerState>();
    Rng gr(seed);
    state->pg = PreparedGraph::from(random_graph(10, 0.35, gr));

    LayerConfig cfg;
    cfg.kind = kind;
    cfg.in_dim = 5;
    cfg.out_dim = 3;
    cfg.heads = kind == LayerKind::GAT ? 2 : 1;
    cfg.concat_heads = kind == LayerKind::GAT && concat_heads;
    cfg.activation = Activation::PReLU;
    Rng pr(seed + 1);
    state->layer = make_layer(cfg, "layer", pr);
    // move attention vectors off their zero init so the fixture is generic
    Rng ar(seed + 2);
    for (auto& p : state->layer.params)
        if (p.id.find("a_src") != std::string::npos || p.id.find("a_dst") != std::string::npos)
            for (double& v : p.value.data) v = 0.5 * (2.0 * ar.uniform() - 1.0);
    Rng xr(seed + 3);
    state->x = Parameter("X", random_tensor(10, 5, xr, 0.05));

    GradCheckScenario sc;
    sc.name = std::move(name);
    sc.threshold = 1e-5;
    sc.state = state;
    sc.params.push_back(&state->x);
    for (auto& p : state->layer.params) sc.params.push_back(&p);
    sc.record = [state](Tape& t) {
        NodeId h = layer_forward(t, state->layer, state->pg, t.watch(state->x), false);
        return weighted_sum(t, h, 26);
    };
    return sc;
}

void add_layer_scenarios(std::vector<GradCheckScenario>& out) {
    out.push_back(layer_scenario("layer.gcn", LayerKind::GCN, false, 300));
    out.push_back(layer_scenario("layer.gat_concat", LayerKind::GAT, true, 310));
    out.push_back(layer_scenario("layer.gat_avg", LayerKind::GAT, false, 320));
    out.push_back(layer_scenario("layer.gin", LayerKind::GIN, false, 330));
    out.push_back(layer_scenario("layer.mlp", LayerKind::MLP, false, 340));
}

// --- loss scenarios ----------------------------------------------------------

struct LossState {
    Tensor x;
    Parameter z;
    MaskPlan plan;
    LossConfig cfg;
};

enum class RowRegime { Generic, NearParallel, NearAntiparallel };

GradCheckScenario loss_scenario(std::string name, Criterion criterion, double gamma,
                                RowRegime regime, std::uint64_t seed) {
    auto state = std::make_shared<LossState>();
    Rng rng(seed);
    state->x = random_tensor(10, 4, rng, 0.05);
    Tensor z0 = random_tensor(10, 4, rng, 0.05);
    switch (regime) {
        case RowRegime::Generic:
            state->plan.masked = {1, 2, 4, 7, 9};
            break;
        case RowRegime::NearParallel:
            // isolated in its own plan: the loss magnitude then shrinks with
            // the vanishing gradient and central differences stay resolvable
            for (std::size_t j = 0; j < 4; ++j)
                z0.at(1, j) = state->x.at(1, j) * 1.3 + 1e-2 * rng.normal();
            state->plan.masked = {1};
            break;
        case RowRegime::NearAntiparallel:
            for (std::size_t j = 0; j < 4; ++j)
                z0.at(4, j) = -state->x.at(4, j) * 0.8 + 1e-2 * rng.normal();
            state->plan.masked = {4};
            break;
    }
    state->z = Parameter("Z", std::move(z0));
    state->cfg.criterion = criterion;
    state->cfg.gamma = gamma;

    GradCheckScenario sc;
    sc.name = std::move(name);
    sc.threshold = 1e-6;
    sc.state = state;
    sc.params.push_back(&state->z);
    sc.record = [state](Tape& t) {
        NodeId z = t.watch(state->z);
        return reconstruction_loss(t, state->x, z, state->plan, state->cfg);
    };
    return sc;
}

void add_loss_scenarios(std::vector<GradCheckScenario>& out) {
    out.push_back(loss_scenario("loss.sce_gamma1", Criterion::SCE, 1.0, RowRegime::Generic, 400));
    out.push_back(loss_scenario("loss.sce_gamma2", Criterion::SCE, 2.0, RowRegime::Generic, 410));
    out.push_back(loss_scenario("loss.sce_gamma3", Criterion::SCE, 3.0, RowRegime::Generic, 420));
    out.push_back(
        loss_scenario("loss.sce_near_parallel", Criterion::SCE, 3.0, RowRegime::NearParallel, 430));
    out.push_back(loss_scenario("loss.sce_near_antiparallel", Criterion::SCE, 3.0,
                                RowRegime::NearAntiparallel, 435));
    out.push_back(loss_scenario("loss.mse", Criterion::MSE, 1.0, RowRegime::Generic, 440));
}

// --- end-to-end scenario -------------------------------------------------------

struct EndToEndState {
    Graph g;
    PreparedGraph pg;
    TrainResult models;
    MaskPlan plan;
    RunConfig run;
};

GradCheckScenario end_to_end_scenario() {
    auto state = std::make_shared<EndToEndState>();
    SbmFeatureSpec fs;
    fs.dim = 5;
    fs.mean_scale = 1.0;
    fs.noise_sigma = 0.3;
    state->g = generate_sbm({6, 6}, 0.5, 0.15, fs, 77);

    state->run.seed = 7;
    state->run.hidden_size = 8;
    state->run.encoder_kind = LayerKind::GAT;
    state->run.encoder_layers = 2;
    state->run.encoder_heads = 2;
    state->run.decoder_kind = LayerKind::GAT;
    state->run.loss.gamma = 3.0;
    state->run.mask.mask_ratio = 0.5;
    state->run.mask.replace_rate = 0.2;

    state->models = init_models(state->g.feature_dim(), state->run);
    // generic attention weights instead of the zero init
    Rng ar(78);
    for (Parameter* p : state->models.all_parameters())
        if (p->id.find("a_src") != std::string::npos || p->id.find("a_dst") != std::string::npos)
            for (double& v : p->value.data) v = 0.4 * (2.0 * ar.uniform() - 1.0);

    state->pg = PreparedGraph::from(state->g.adjacency);
    state->plan = sample_mask(state->g.n, MaskConfig{0.5, 0.2, 79});

    GradCheckScenario sc;
    sc.name = "e2e.graphmae_gat_sce";
    sc.threshold = 1e-4;
    sc.state = state;
    for (Parameter* p : state->models.all_parameters()) sc.params.push_back(p);
    sc.record = [state](Tape& t) {
        NodeId x_token = t.watch(state->models.tokens.x_mask);
        NodeId x_tilde = apply_input_mask(t, state->g.features, state->plan, x_token);
        NodeId h = encode(t, state->models.encoder, state->pg, x_tilde);
        NodeId h_token = t.watch(state->models.tokens.h_dmask);
        h = remask(t, h, state->plan, h_token);
        NodeId z = decode(t, state->models.decoder, state->pg, h);
        return reconstruction_loss(t, state->g.features, z, state->plan, state->run.loss);
    };
    return sc;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(bool corrupt_analytic) {
    std::vector<GradCheckScenario> scenarios;
    add_op_scenarios(scenarios);
    add_layer_scenarios(scenarios);
    add_loss_scenarios(scenarios);
    scenarios.push_back(end_to_end_scenario());

    std::vector<GradCheckResult> results;
    results.reserve(scenarios.size());
    for (auto& sc : scenarios) results.push_back(run_scenario(sc, corrupt_analytic));
    return results;
}

void write_gradcheck_csv(const std::vector<GradCheckResult>& results, const std::string& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        out << "check,max_rel_err,threshold,pass\n";
        char buf[160];
        for (const auto& r : results) {
            std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%s\n", r.name.c_str(), r.max_rel_err,
                          r.threshold, r.pass() ? "true" : "false");
            out << buf;
        }
    }, /*binary=*/false);
}

}  // namespace graphmae

// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "graphmae/errors.hpp"
#include "graphmae/eval.hpp"
#include "graphmae/train.hpp"
#include "helpers/oracles.hpp"

using namespace graphmae;
namespace fs = std::filesystem;

namespace {

RunConfig small_run() {
    RunConfig run;
    run.hidden_size = 16;
    run.encoder_heads = 4;
    run.mask.mask_ratio = 0.5;
    run.mask.replace_rate = 0.05;
    run.loss.gamma = 3.0;
    run.optim.max_epoch = 30;
    run.seed = 5;
    return run;
}

Graph sbm_fixture() {
    SbmFeatureSpec spec;
    spec.dim = 8;
    spec.mean_scale = 1.0;
    spec.noise_sigma = 0.3;
    return generate_sbm({30, 30}, 0.2, 0.02, spec, 17);
}

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("cosine schedule endpoints and midpoint") {
    CHECK(cosine_lr(0, 100, 0.02) == 0.02);
    CHECK(cosine_lr(100, 100, 0.02) == doctest::Approx(0.0).epsilon(1e-18));
    CHECK(cosine_lr(50, 100, 0.02) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK_THROWS_AS(cosine_lr(0, 0, 0.02), ValidationError);
}

TEST_CASE("adam with zero gradients and no decay leaves parameters untouched") {
    Parameter p("p", Tensor::from_rows({{1.0, -2.0}}));
    p.zero_grad();
    std::vector<Parameter*> params{&p};
    AdamState state;
    state.init(params);
    OptimConfig cfg;
    cfg.weight_decay = 0.0;
    adam_step(params, state, 0.1, cfg);
    CHECK(p.value.data == std::vector<double>{1.0, -2.0});
    CHECK(state.t == 1);
}

TEST_CASE("first adam step matches the bias-corrected closed form") {
    Parameter p("p", Tensor::from_rows({{0.5}}));
    p.zero_grad();
    p.grad.at(0, 0) = 0.3;
    std::vector<Parameter*> params{&p};
    AdamState state;
    state.init(params);
    OptimConfig cfg;  // wd = 0 default
    adam_step(params, state, 0.01, cfg);
    // m_hat = g, v_hat = g^2 after one bias-corrected step
    double expected = 0.5 - 0.01 * 0.3 / (std::sqrt(0.3 * 0.3) + cfg.eps_adam);
    CHECK(p.value.at(0, 0) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("adam trajectory matches an independently coded scalar oracle") {
    // minimize f(w) = 0.5 * a w^2 on both paths for 100 steps
    const double a = 2.5, lr = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;

    double w_oracle = 1.7, m = 0.0, v = 0.0;
    for (int t = 1; t <= 100; ++t) {
        double g = a * w_oracle;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        double mh = m / (1 - std::pow(b1, t));
        double vh = v / (1 - std::pow(b2, t));
        w_oracle -= lr * mh / (std::sqrt(vh) + eps);
    }

    Parameter p("w", Tensor::from_rows({{1.7}}));
    std::vector<Parameter*> params{&p};
    AdamState state;
    state.init(params);
    OptimConfig cfg;
    cfg.lr0 = lr;
    for (int t = 0; t < 100; ++t) {
        p.zero_grad();
        Tape tape;
        NodeId w = tape.watch(p);
        NodeId loss = tape.scalar_mul(tape.mul(w, w), 0.5 * a);
        tape.backward(tape.sum_all(loss));
        adam_step(params, state, lr, cfg);
    }
    CHECK(std::abs(p.value.at(0, 0) - w_oracle) < 1e-10);
}

TEST_CASE("decoupled weight decay shrinks parameters before the update") {
    Parameter p("p", Tensor::from_rows({{2.0}}));
    p.zero_grad();  // no gradient: only the decay acts
    std::vector<Parameter*> params{&p};
    AdamState state;
    state.init(params);
    OptimConfig cfg;
    cfg.weight_decay = 0.1;
    adam_step(params, state, 0.5, cfg);
    CHECK(p.value.at(0, 0) == doctest::Approx(2.0 * (1.0 - 0.5 * 0.1)).epsilon(1e-15));
}

TEST_CASE("pretraining reduces the loss on the sbm fixture") {
    Graph g = row_normalize_features(sbm_fixture());
    RunConfig run = small_run();
    run.optim.max_epoch = 60;
    TrainResult result = pretrain(g, run);
    REQUIRE(result.log.size() == 60);
    double first = result.log.front().loss;
    double last = result.log.back().loss;
    CHECK(last < first);
    // smoke property: at least a 20% relative drop end to end
    CHECK(last < 0.8 * first);
}

TEST_CASE("max_epoch zero returns the initialized model and an empty log") {
    Graph g = sbm_fixture();
    RunConfig run = small_run();
    run.optim.max_epoch = 0;
    TrainResult trained = pretrain(g, run);
    CHECK(trained.log.empty());
    TrainResult fresh = init_models(g.feature_dim(), run);
    auto tp = trained.all_parameters();
    auto fp = fresh.all_parameters();
    REQUIRE(tp.size() == fp.size());
    for (std::size_t i = 0; i < tp.size(); ++i) CHECK(tp[i]->value.data == fp[i]->value.data);
}

TEST_CASE("identical seeds give bit-identical parameters and logs") {
    Graph g = row_normalize_features(sbm_fixture());
    RunConfig run = small_run();
    TrainResult a = pretrain(g, run);
    TrainResult b = pretrain(g, run);
    auto pa = a.all_parameters();
    auto pb = b.all_parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i]->id == pb[i]->id);
        CHECK(pa[i]->value.data == pb[i]->value.data);
    }
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);

    RunConfig other = run;
    other.seed = 6;
    TrainResult c = pretrain(g, other);
    CHECK(c.all_parameters()[0]->value.data != pa[0]->value.data);
}

TEST_CASE("one step reaches every parameter and both tokens") {
    Graph g = row_normalize_features(sbm_fixture());
    RunConfig run = small_run();
    run.optim.max_epoch = 1;
    TrainResult before = init_models(g.feature_dim(), run);
    TrainResult after = pretrain(g, run);
    auto pb = before.all_parameters();
    auto pa = after.all_parameters();
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        INFO(pa[i]->id);
        CHECK(pa[i]->value.data != pb[i]->value.data);
    }
}

TEST_CASE("graph-set pretraining runs deterministically over mini-batches") {
    SbmFeatureSpec spec;
    spec.dim = 4;
    GraphSet gs;
    gs.num_classes = 2;
    for (int i = 0; i < 7; ++i) {
        Graph g = generate_sbm({6}, i % 2 ? 0.8 : 0.2, 0.0, spec, 100 + i);
        g.name = "g" + std::to_string(i);
        g.node_labels.clear();
        g.graph_label = i % 2;
        gs.graphs.push_back(std::move(g));
    }
    RunConfig run = small_run();
    run.encoder_kind = LayerKind::GIN;
    run.decoder_kind = LayerKind::GIN;
    run.encoder_layers = 2;
    run.batch_size = 3;
    run.optim.max_epoch = 8;
    TrainResult a = pretrain(gs, run);
    TrainResult b = pretrain(gs, run);
    REQUIRE(a.log.size() == 8);
    for (const auto& e : a.log) CHECK(std::isfinite(e.loss));
    auto pa = a.all_parameters();
    auto pb = b.all_parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value.data == pb[i]->value.data);
}

TEST_CASE("checkpoint round-trip preserves encode outputs bit for bit") {
    Graph g = row_normalize_features(sbm_fixture());
    RunConfig run = small_run();
    run.optim.max_epoch = 5;
    TrainResult trained = pretrain(g, run);

    std::string ckpt = temp_path("gm_ckpt.bin");
    std::string arch = temp_path("gm_arch.json");
    save_checkpoint(trained, ckpt);
    save_architecture_json(trained, arch);
    TrainResult loaded = load_checkpoint(ckpt, arch);

    Tensor h1 = embed(trained.encoder, g);
    Tensor h2 = embed(loaded.encoder, g);
    CHECK(h1.data == h2.data);
    fs::remove(ckpt);
    fs::remove(arch);
}

TEST_CASE("corrupted checkpoint magic is a format error") {
    Graph g = sbm_fixture();
    RunConfig run = small_run();
    TrainResult models = init_models(g.feature_dim(), run);
    std::string ckpt = temp_path("gm_bad.bin");
    std::string arch = temp_path("gm_bad.json");
    save_checkpoint(models, ckpt);
    save_architecture_json(models, arch);
    {
        std::fstream f(ckpt, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXXXX", 6);
    }
    CHECK_THROWS_AS(load_checkpoint(ckpt, arch), FormatError);
    fs::remove(ckpt);
    fs::remove(arch);
}

TEST_CASE("a checkpoint does not load against a different architecture") {
    Graph g = sbm_fixture();
    RunConfig gat_run = small_run();
    TrainResult gat_models = init_models(g.feature_dim(), gat_run);

    RunConfig gin_run = small_run();
    gin_run.encoder_kind = LayerKind::GIN;
    gin_run.decoder_kind = LayerKind::GIN;
    TrainResult gin_models = init_models(g.feature_dim(), gin_run);

    std::string ckpt = temp_path("gm_mismatch.bin");
    std::string arch = temp_path("gm_mismatch.json");
    save_checkpoint(gat_models, ckpt);
    save_architecture_json(gin_models, arch);  // wrong architecture on purpose
    CHECK_THROWS_AS(load_checkpoint(ckpt, arch), FormatError);
    fs::remove(ckpt);
    fs::remove(arch);
}

TEST_CASE("train log csv is written with one row per epoch") {
    std::vector<TrainLogEntry> log{{0, 0.5, 0.01}, {1, 0.25, 0.005}};
    std::string path = temp_path("gm_log.csv");
    write_train_log_csv(log, path);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,loss,lr");
    std::size_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    fs::remove(path);
}

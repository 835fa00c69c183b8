// SPDX-License-Identifier: Apache-2.0

#include "graphmae/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>

#include <nlohmann/json.hpp>

#include "graphmae/errors.hpp"
#include "graphmae/io.hpp"

namespace graphmae {

using nlohmann::json;

void RunConfig::validate() const {
    optim.validate();
    if (mask.mask_ratio < 0 || mask.mask_ratio > 1)
        throw ValidationError("mask_ratio must lie in [0,1]");
    if (mask.replace_rate < 0 || mask.replace_rate > 1)
        throw ValidationError("replace_rate must lie in [0,1]");
    if (loss.gamma < 1.0) throw ValidationError("gamma must be >= 1");
    if (loss.eps_norm <= 0.0) throw ValidationError("eps_norm must be positive");
    if (hidden_size == 0) throw ValidationError("hidden_size must be positive");
    if (encoder_heads == 0 || decoder_heads == 0) throw ValidationError("heads must be >= 1");
    if (decoder_layers == 0) throw ValidationError("decoder needs at least one layer");
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
}

std::vector<Parameter*> TrainResult::all_parameters() {
    std::vector<Parameter*> params = encoder.parameters();
    for (Parameter* p : decoder.parameters()) params.push_back(p);
    params.push_back(&tokens.x_mask);
    params.push_back(&tokens.h_dmask);
    return params;
}

TrainResult init_models(std::size_t feature_dim, const RunConfig& run) {
    run.validate();
    if (feature_dim == 0) throw ValidationError("feature dimension must be positive");
    Rng rng(Rng::mix(run.seed, 10));
    TrainResult r;
    r.encoder = build_model(ModelRole::Encoder, run.encoder_kind, run.encoder_layers, feature_dim,
                            run.hidden_size, run.hidden_size, run.encoder_heads,
                            run.negative_slope, rng);
    r.decoder = build_model(ModelRole::Decoder, run.decoder_kind, run.decoder_layers,
                            run.hidden_size, run.hidden_size, feature_dim, run.decoder_heads,
                            run.negative_slope, rng);
    r.tokens = MaskTokens(feature_dim, run.hidden_size, rng);
    return r;
}

namespace {

// One corrupted-reconstruction step on a single (possibly merged) graph.
// Returns the loss; a degenerate empty plan skips the update entirely.
double train_step(const Tensor& x, const PreparedGraph& pg, TrainResult& models,
                  const MaskPlan& plan, const RunConfig& run,
                  std::span<Parameter* const> params, AdamState& state, double lr) {
    if (plan.empty()) return 0.0;
    for (Parameter* p : params) p->zero_grad();

    Tape tape;
    NodeId x_token = tape.watch(models.tokens.x_mask);
    NodeId x_tilde = apply_input_mask(tape, x, plan, x_token);
    NodeId h = encode(tape, models.encoder, pg, x_tilde);
    if (run.remask_enabled) {
        NodeId h_token = tape.watch(models.tokens.h_dmask);
        h = remask(tape, h, plan, h_token);
    }
    NodeId z = decode(tape, models.decoder, pg, h);
    NodeId loss = reconstruction_loss(tape, x, z, plan, run.loss);
    double loss_value = tape.value(loss).scalar();
    tape.backward(loss);
    adam_step(params, state, lr, run.optim);
    return loss_value;
}

void warn_degenerate_mask(const RunConfig& run, std::size_t n) {
    if (sample_mask(n, MaskConfig{run.mask.mask_ratio, 0.0, 0}).empty())
        std::cerr << "warning: mask_ratio " << run.mask.mask_ratio << " masks zero of " << n
                  << " nodes; training is degenerate\n";
}

}  // namespace

TrainResult pretrain(const Graph& g, const RunConfig& run) {
    run.validate();
    g.check();
    TrainResult models = init_models(g.feature_dim(), run);
    auto params = models.all_parameters();
    AdamState state;
    state.init(params);
    PreparedGraph pg = PreparedGraph::from(g.adjacency);
    if (run.optim.max_epoch > 0) warn_degenerate_mask(run, g.n);

    for (std::size_t epoch = 0; epoch < run.optim.max_epoch; ++epoch) {
        double lr = cosine_lr(epoch, run.optim.max_epoch, run.optim.lr0);
        MaskConfig mc{run.mask.mask_ratio, run.mask.replace_rate, Rng::mix(run.seed, 1000 + epoch)};
        MaskPlan plan = sample_mask(g.n, mc);
        double loss;
        try {
            loss = train_step(g.features, pg, models, plan, run, params, state, lr);
        } catch (const NumericDomainError& e) {
            double norm_sq = 0.0;
            for (const Parameter* p : params)
                for (double v : p->value.data) norm_sq += v * v;
            throw NumericDomainError("epoch " + std::to_string(epoch) + ": " + e.what() +
                                     " (parameter norm " + std::to_string(std::sqrt(norm_sq)) +
                                     ")");
        }
        models.log.push_back(TrainLogEntry{epoch, loss, lr});
    }
    return models;
}

TrainResult pretrain(const GraphSet& gs, const RunConfig& run) {
    run.validate();
    gs.check();
    if (gs.graphs.empty()) throw ValidationError("pretrain: empty graph set");
    TrainResult models = init_models(gs.feature_dim(), run);
    auto params = models.all_parameters();
    AdamState state;
    state.init(params);

    std::vector<std::size_t> order(gs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < run.optim.max_epoch; ++epoch) {
        double lr = cosine_lr(epoch, run.optim.max_epoch, run.optim.lr0);
        std::uint64_t epoch_seed = Rng::mix(run.seed, 1000 + epoch);
        Rng shuffle_rng(Rng::mix(epoch_seed, 5));
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);

        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += run.batch_size) {
            std::size_t end = std::min(start + run.batch_size, order.size());
            std::vector<const Graph*> batch;
            for (std::size_t i = start; i < end; ++i) batch.push_back(&gs.graphs[order[i]]);
            Graph merged = merge_block_diagonal(batch);
            PreparedGraph pg = PreparedGraph::from(merged.adjacency);
            MaskConfig mc{run.mask.mask_ratio, run.mask.replace_rate,
                          Rng::mix(epoch_seed, 100 + batches)};
            MaskPlan plan = sample_mask(merged.n, mc);
            epoch_loss +=
                train_step(merged.features, pg, models, plan, run, params, state, lr);
            ++batches;
        }
        models.log.push_back(TrainLogEntry{epoch, epoch_loss / static_cast<double>(batches), lr});
    }
    return models;
}

void write_train_log_csv(const std::vector<TrainLogEntry>& log, const std::string& path) {
    atomic_write_file(path, [&](std::ostream& out) {
        out << "epoch,loss,lr\n";
        char buf[80];
        for (const auto& e : log) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e.epoch, e.loss, e.lr);
            out << buf;
        }
    }, /*binary=*/false);
}

// --- checkpointing -----------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[6] = {'G', 'M', 'A', 'E', 'P', '1'};

json layer_config_to_json(const LayerConfig& cfg) {
    return json{{"kind", to_string(cfg.kind)},
                {"in_dim", cfg.in_dim},
                {"out_dim", cfg.out_dim},
                {"heads", cfg.heads},
                {"concat_heads", cfg.concat_heads},
                {"negative_slope", cfg.negative_slope},
                {"gin_eps_learnable", cfg.gin_eps_learnable},
                {"activation", cfg.activation == Activation::PReLU ? "prelu" : "identity"}};
}

LayerConfig layer_config_from_json(const json& j) {
    LayerConfig cfg;
    cfg.kind = layer_kind_from_string(j.at("kind").get<std::string>());
    cfg.in_dim = j.at("in_dim").get<std::size_t>();
    cfg.out_dim = j.at("out_dim").get<std::size_t>();
    cfg.heads = j.at("heads").get<std::size_t>();
    cfg.concat_heads = j.at("concat_heads").get<bool>();
    cfg.negative_slope = j.at("negative_slope").get<double>();
    cfg.gin_eps_learnable = j.at("gin_eps_learnable").get<bool>();
    std::string act = j.at("activation").get<std::string>();
    if (act != "prelu" && act != "identity") throw FormatError("unknown activation: " + act);
    cfg.activation = act == "prelu" ? Activation::PReLU : Activation::Identity;
    return cfg;
}

json model_to_json(const Model& m) {
    json layers = json::array();
    for (const auto& l : m.layers) layers.push_back(layer_config_to_json(l.cfg));
    return json{{"layers", layers}};
}

Model model_from_json(const json& j, ModelRole role) {
    std::vector<LayerConfig> configs;
    for (const auto& lj : j.at("layers")) configs.push_back(layer_config_from_json(lj));
    Rng rng(0);  // values are overwritten by the checkpoint payload
    return model_from_configs(role, configs, rng);
}

}  // namespace

void save_checkpoint(const TrainResult& result, const std::string& path) {
    auto& mutable_result = const_cast<TrainResult&>(result);
    auto params = mutable_result.all_parameters();
    atomic_write_file(path, [&](std::ostream& out) {
        out.write(kCheckpointMagic, 6);
        io_write_u64(out, params.size());
        for (const Parameter* p : params) {
            io_write_u64(out, p->id.size());
            out.write(p->id.data(), static_cast<std::streamsize>(p->id.size()));
            io_write_u64(out, p->value.rows);
            io_write_u64(out, p->value.cols);
            for (double v : p->value.data) io_write_f64(out, v);
        }
    }, /*binary=*/true);
}

void save_architecture_json(const TrainResult& result, const std::string& path) {
    json j{{"format", "graphmae-arch-v1"},
           {"feature_dim", result.tokens.x_mask.value.cols},
           {"hidden_size", result.tokens.h_dmask.value.cols},
           {"encoder", model_to_json(result.encoder)},
           {"decoder", model_to_json(result.decoder)}};
    atomic_write_file(path, [&](std::ostream& out) { out << j.dump(2) << "\n"; },
                      /*binary=*/false);
}

TrainResult load_checkpoint(const std::string& checkpoint_path,
                            const std::string& architecture_path) {
    std::ifstream aj(architecture_path);
    if (!aj) throw FormatError("cannot open architecture file: " + architecture_path);
    json arch;
    try {
        aj >> arch;
    } catch (const json::exception& e) {
        throw FormatError("bad architecture JSON: " + std::string(e.what()));
    }
    TrainResult r;
    try {
        if (arch.at("format").get<std::string>() != "graphmae-arch-v1")
            throw FormatError("unknown architecture format");
        r.encoder = model_from_json(arch.at("encoder"), ModelRole::Encoder);
        r.decoder = model_from_json(arch.at("decoder"), ModelRole::Decoder);
        auto d = arch.at("feature_dim").get<std::size_t>();
        auto dh = arch.at("hidden_size").get<std::size_t>();
        Rng rng(0);
        r.tokens = MaskTokens(d, dh, rng);
    } catch (const json::exception& e) {
        throw FormatError("bad architecture JSON: " + std::string(e.what()));
    }

    std::ifstream in(checkpoint_path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + checkpoint_path);
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, kCheckpointMagic, 6) != 0)
        throw FormatError("bad checkpoint magic");

    auto params = r.all_parameters();
    std::uint64_t count = io_read_u64(in, "checkpoint header");
    if (count != params.size())
        throw FormatError("architecture mismatch: checkpoint has " + std::to_string(count) +
                          " parameters, architecture expects " + std::to_string(params.size()));
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint64_t id_len = io_read_u64(in, "parameter id");
        std::string id(id_len, '\0');
        in.read(id.data(), static_cast<std::streamsize>(id_len));
        if (!in) throw FormatError("truncated parameter id");
        std::uint64_t rows = io_read_u64(in, "parameter shape");
        std::uint64_t cols = io_read_u64(in, "parameter shape");
        Parameter* p = params[i];
        if (p->id != id)
            throw FormatError("architecture mismatch: expected parameter '" + p->id +
                              "', checkpoint has '" + id + "'");
        if (p->value.rows != rows || p->value.cols != cols)
            throw FormatError("architecture mismatch: parameter '" + id + "' shape differs");
        for (double& v : p->value.data) v = io_read_f64(in, "parameter payload");
    }
    return r;
}

}  // namespace graphmae

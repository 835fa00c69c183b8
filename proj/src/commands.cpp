// SPDX-License-Identifier: Apache-2.0

#include "graphmae/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include "graphmae/config.hpp"
#include "graphmae/errors.hpp"
#include "graphmae/eval.hpp"
#include "graphmae/gradcheck.hpp"
#include "graphmae/io.hpp"
#include "graphmae/train.hpp"

namespace fs = std::filesystem;

namespace graphmae {

namespace {

// usage/config/data problems -> 2, numeric blowups -> 3
template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const NumericDomainError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

FullConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    FullConfig cfg = parse_config_file(path);
    if (seed_override) cfg.run.seed = *seed_override;
    return cfg;
}

TrainResult pretrain_from_config(const FullConfig& cfg) {
    if (cfg.data.kind == DataConfig::Kind::GraphSetDir)
        return pretrain(load_graph_dataset(cfg.data), cfg.run);
    return pretrain(load_node_dataset(cfg.data), cfg.run);
}

void write_run_artifacts(const TrainResult& result, const std::string& out_dir) {
    fs::create_directories(out_dir);
    save_checkpoint(result, (fs::path(out_dir) / "checkpoint.bin").string());
    save_architecture_json(result, (fs::path(out_dir) / "architecture.json").string());
    write_train_log_csv(result.log, (fs::path(out_dir) / "train_log.csv").string());
}

EvalReport node_probe_report(const FullConfig& cfg, const Model& encoder) {
    Graph g = load_node_dataset(cfg.data);
    if (!g.has_node_labels())
        throw ValidationError("probe requires node labels in the dataset");
    Tensor h = embed(encoder, g);
    NodeSplit split = split_nodes(g, cfg.split, cfg.split_seed);
    return linear_probe(h, g.node_labels, split, cfg.probe, cfg.run.seed);
}

EvalReport graph_eval_report(const FullConfig& cfg, const Model& encoder) {
    GraphSet gs = load_graph_dataset(cfg.data);
    ProbeConfig probe = cfg.probe;
    if (!cfg.probe_repeats_set) probe.repeats = 5;  // 5-run protocol for graph folds
    return kfold_graph_eval(gs, encoder, cfg.pooling, cfg.probe_folds, probe.repeats, probe,
                            cfg.run.seed);
}

void write_report(const EvalReport& report, const std::string& out_dir) {
    fs::create_directories(out_dir);
    atomic_write_file((fs::path(out_dir) / "report.json").string(),
                      [&](std::ostream& out) { out << report.to_json() << "\n"; },
                      /*binary=*/false);
}

TrainResult load_run_dir(const std::string& checkpoint_dir) {
    return load_checkpoint((fs::path(checkpoint_dir) / "checkpoint.bin").string(),
                           (fs::path(checkpoint_dir) / "architecture.json").string());
}

}  // namespace

int cmd_pretrain(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override) {
    return guarded([&] {
        FullConfig cfg = load_config(config_path, seed_override);
        TrainResult result = pretrain_from_config(cfg);
        write_run_artifacts(result, out_dir);
        return kExitOk;
    });
}

int cmd_probe(const std::string& config_path, const std::string& checkpoint_dir,
              const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
    return guarded([&] {
        FullConfig cfg = load_config(config_path, seed_override);
        TrainResult models = load_run_dir(checkpoint_dir);
        write_report(node_probe_report(cfg, models.encoder), out_dir);
        return kExitOk;
    });
}

int cmd_graph_eval(const std::string& config_path, const std::string& checkpoint_dir,
                   const std::string& out_dir, std::optional<std::uint64_t> seed_override) {
    return guarded([&] {
        FullConfig cfg = load_config(config_path, seed_override);
        TrainResult models = load_run_dir(checkpoint_dir);
        write_report(graph_eval_report(cfg, models.encoder), out_dir);
        return kExitOk;
    });
}

namespace {

struct SweepPoint {
    std::string value;
    FullConfig cfg;
    std::string dir;
    double mean = 0.0;
    double stdev = 0.0;
    std::string error;
};

void apply_axis(FullConfig& cfg, const std::string& axis, const std::string& value) {
    if (axis == "mask_ratio") {
        cfg.run.mask.mask_ratio = std::stod(value);
    } else if (axis == "gamma") {
        cfg.run.loss.gamma = std::stod(value);
    } else if (axis == "criterion") {
        cfg.run.loss.criterion = criterion_from_string(value);
    } else if (axis == "decoder_kind") {
        cfg.run.decoder_kind = layer_kind_from_string(value);
    } else if (axis == "remask_on_off") {
        if (value == "on") cfg.run.remask_enabled = true;
        else if (value == "off") cfg.run.remask_enabled = false;
        else throw ValidationError("remask_on_off values must be on/off, got '" + value + "'");
    } else {
        throw ValidationError("unknown ablation axis '" + axis + "'");
    }
}

std::string sanitize_for_path(const std::string& v) {
    std::string out = v;
    for (char& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    return out;
}

std::size_t sweep_parallelism(std::size_t points) {
    std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("GRAPHMAE_THREADS")) {
        try {
            cap = std::max<std::size_t>(1, std::stoull(env));
        } catch (const std::exception&) {
            throw ValidationError("GRAPHMAE_THREADS is not an integer");
        }
    }
    return std::min(cap, points);
}

void run_sweep_point(SweepPoint& pt) {
    try {
        TrainResult result = pretrain_from_config(pt.cfg);
        write_run_artifacts(result, pt.dir);
        EvalReport report = pt.cfg.data.kind == DataConfig::Kind::GraphSetDir
                                ? graph_eval_report(pt.cfg, result.encoder)
                                : node_probe_report(pt.cfg, result.encoder);
        write_report(report, pt.dir);
        pt.mean = report.mean;
        pt.stdev = report.stdev;
    } catch (const std::exception& e) {
        pt.error = e.what();
    }
}

}  // namespace

int cmd_ablate(const std::string& config_path, const std::string& axis,
               const std::vector<std::string>& values, const std::string& out_dir,
               bool emit_gnuplot, std::optional<std::uint64_t> seed_override) {
    return guarded([&] {
        if (values.empty()) throw ValidationError("ablate: no axis values given");
        FullConfig base = load_config(config_path, seed_override);

        std::vector<SweepPoint> points;
        for (const std::string& v : values) {
            SweepPoint pt;
            pt.value = v;
            pt.cfg = base;
            apply_axis(pt.cfg, axis, v);  // validates axis and value up front
            pt.dir = (fs::path(out_dir) / ("value_" + sanitize_for_path(v))).string();
            points.push_back(std::move(pt));
        }
        fs::create_directories(out_dir);

        std::size_t workers = sweep_parallelism(points.size());
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= points.size()) return;
                    run_sweep_point(points[i]);
                }
            });
        for (auto& t : pool) t.join();

        for (const auto& pt : points)
            if (!pt.error.empty())
                throw ValidationError("sweep point '" + pt.value + "' failed: " + pt.error);

        atomic_write_file((fs::path(out_dir) / "sweep.csv").string(), [&](std::ostream& out) {
            out << "axis_value,mean,std\n";
            char buf[128];
            for (const auto& pt : points) {
                std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", pt.value.c_str(), pt.mean,
                              pt.stdev);
                out << buf;
            }
        }, /*binary=*/false);

        if (emit_gnuplot) {
            atomic_write_file((fs::path(out_dir) / "sweep.gnuplot").string(),
                              [&](std::ostream& out) {
                                  out << "set datafile separator ','\n"
                                      << "set xlabel '" << axis << "'\n"
                                      << "set ylabel 'accuracy'\n"
                                      << "plot 'sweep.csv' skip 1 using 1:2:3 "
                                         "with yerrorlines title 'sweep'\n";
                              },
                              /*binary=*/false);
        }
        return kExitOk;
    });
}

int cmd_gradcheck(const std::string& out_dir) {
    return guarded([&] {
        std::vector<GradCheckResult> results = run_gradcheck();
        fs::create_directories(out_dir);
        write_gradcheck_csv(results, (fs::path(out_dir) / "gradcheck.csv").string());
        bool all_pass = true;
        for (const auto& r : results) {
            if (!r.pass()) {
                all_pass = false;
                std::cerr << "gradcheck failure: " << r.name << " max_rel_err=" << r.max_rel_err
                          << " threshold=" << r.threshold << "\n";
            }
        }
        return all_pass ? kExitOk : kExitCheckFailure;
    });
}

}  // namespace graphmae

// SPDX-License-Identifier: Apache-2.0
//
// graphmae: masked graph autoencoder pretraining, evaluation, and ablation.

#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphmae/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"GraphMAE: self-supervised masked graph autoencoder"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", checkpoint_dir, axis;
    std::vector<std::string> values;
    bool emit_gnuplot = false;
    std::optional<std::uint64_t> seed;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("--config", config_path, "config file (key = value)")->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed, "override the config seed");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "pretrain on a graph or graph set");
    add_common(pretrain, true);

    CLI::App* probe = app.add_subcommand("probe", "linear-probe a frozen encoder (node level)");
    add_common(probe, true);
    probe->add_option("--checkpoint", checkpoint_dir, "directory written by pretrain")->required();

    CLI::App* geval = app.add_subcommand("graph-eval", "k-fold evaluation on a graph set");
    add_common(geval, true);
    geval->add_option("--checkpoint", checkpoint_dir, "directory written by pretrain")->required();

    CLI::App* ablate = app.add_subcommand("ablate", "sweep one config axis (pretrain + probe)");
    add_common(ablate, true);
    ablate->add_option("--axis", axis,
                       "mask_ratio | gamma | criterion | decoder_kind | remask_on_off")
        ->required();
    ablate->add_option("--values", values, "comma-separated axis values")
        ->required()
        ->delimiter(',');
    ablate->add_flag("--emit-gnuplot", emit_gnuplot, "also write a gnuplot script stub");

    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    add_common(gradcheck, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : graphmae::kExitUsage;
    }

    if (pretrain->parsed()) return graphmae::cmd_pretrain(config_path, out_dir, seed);
    if (probe->parsed()) return graphmae::cmd_probe(config_path, checkpoint_dir, out_dir, seed);
    if (geval->parsed())
        return graphmae::cmd_graph_eval(config_path, checkpoint_dir, out_dir, seed);
    if (ablate->parsed())
        return graphmae::cmd_ablate(config_path, axis, values, out_dir, emit_gnuplot, seed);
    if (gradcheck->parsed()) return graphmae::cmd_gradcheck(out_dir);
    return graphmae::kExitUsage;
}

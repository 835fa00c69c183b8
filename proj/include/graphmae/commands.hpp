// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace graphmae {

// Exit codes shared by every command:
//   0 success, 1 check failure, 2 usage/config error, 3 numeric failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;

// Pretrains per the config and writes checkpoint.bin, architecture.json,
// train_log.csv into out_dir.
int cmd_pretrain(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override);

// Frozen-encoder linear probe on the node dataset; writes report.json.
int cmd_probe(const std::string& config_path, const std::string& checkpoint_dir,
              const std::string& out_dir, std::optional<std::uint64_t> seed_override);

// Pooled-readout stratified k-fold on a graph set; writes report.json.
int cmd_graph_eval(const std::string& config_path, const std::string& checkpoint_dir,
                   const std::string& out_dir, std::optional<std::uint64_t> seed_override);

// Sweeps one axis (mask_ratio | gamma | criterion | decoder_kind |
// remask_on_off), pretrain+probe per value, each run fully seeded from the
// base config. Emits sweep.csv (axis_value,mean,std) plus per-value run
// directories; optionally a gnuplot stub. GRAPHMAE_THREADS caps the number
// of concurrently running sweep points.
int cmd_ablate(const std::string& config_path, const std::string& axis,
               const std::vector<std::string>& values, const std::string& out_dir,
               bool emit_gnuplot, std::optional<std::uint64_t> seed_override);

// Full finite-difference suite; writes gradcheck.csv; exit 0 iff every
// check is under its threshold.
int cmd_gradcheck(const std::string& out_dir);

}  // namespace graphmae

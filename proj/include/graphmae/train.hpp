// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphmae/graph.hpp"
#include "graphmae/layers.hpp"
#include "graphmae/loss.hpp"
#include "graphmae/masking.hpp"
#include "graphmae/optim.hpp"

namespace graphmae {

// All knobs of one pretraining run.
struct RunConfig {
    MaskConfig mask;  // seed field unused here; epoch seeds derive from `seed`
    LossConfig loss;
    OptimConfig optim;

    LayerKind encoder_kind = LayerKind::GAT;
    std::size_t encoder_layers = 2;
    std::size_t encoder_heads = 4;
    LayerKind decoder_kind = LayerKind::GAT;
    std::size_t decoder_layers = 1;
    std::size_t decoder_heads = 1;
    double negative_slope = 0.2;
    std::size_t hidden_size = 64;
    bool remask_enabled = true;
    std::size_t batch_size = 32;  // graph-set training only

    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainLogEntry {
    std::size_t epoch;
    double loss;
    double lr;
};

struct TrainResult {
    Model encoder;
    Model decoder;
    MaskTokens tokens;
    std::vector<TrainLogEntry> log;

    std::vector<Parameter*> all_parameters();
};

// Seeded model + token construction (also the "untrained encoder" baseline).
TrainResult init_models(std::size_t feature_dim, const RunConfig& run);

// Full-graph pretraining: per epoch, derive the epoch seed, sample a fresh
// mask, corrupt, encode, re-mask, decode, score, backprop, Adam step at the
// cosine-decayed rate. Deterministic given (seed, config, data).
TrainResult pretrain(const Graph& g, const RunConfig& run);

// Graph-set variant: seeded shuffle each epoch, mini-batches merged into
// one block-diagonal graph per optimizer step; the logged loss is the
// epoch's mean batch loss.
TrainResult pretrain(const GraphSet& gs, const RunConfig& run);

void write_train_log_csv(const std::vector<TrainLogEntry>& log, const std::string& path);

// --- checkpointing ---------------------------------------------------------

// Binary parameter dump, magic "GMAEP1": u64 count, then per parameter a
// length-prefixed id, u64 rows, u64 cols, f64 payload (little-endian).
void save_checkpoint(const TrainResult& result, const std::string& path);

// JSON description of both stacks (kinds, dims, heads) + token dims.
void save_architecture_json(const TrainResult& result, const std::string& path);

// Rebuilds the models from the architecture JSON and fills every parameter
// from the checkpoint. Unknown/missing/mis-shaped ids are a FormatError.
TrainResult load_checkpoint(const std::string& checkpoint_path,
                            const std::string& architecture_path);

}  // namespace graphmae

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "graphmae/eval.hpp"
#include "graphmae/graph.hpp"
#include "graphmae/train.hpp"

namespace graphmae {

struct DataConfig {
    enum class Kind { Sbm, Files, GraphSetDir };
    Kind kind = Kind::Sbm;

    std::string edges, features, labels;  // kind == Files
    std::string dir;                      // kind == GraphSetDir

    std::vector<std::size_t> sbm_blocks{100, 100};
    double sbm_p_in = 0.15;
    double sbm_p_out = 0.01;
    SbmFeatureSpec sbm_features;
    std::uint64_t sbm_seed = 7;

    // row L2 normalization: on by default for node-level data, off for
    // graph sets (one-hot features must stay intact); explicit key wins
    bool row_normalize = true;
    bool row_normalize_set = false;
};

// Everything a CLI run needs, parsed from a flat `key = value` document.
struct FullConfig {
    DataConfig data;
    RunConfig run;
    ProbeConfig probe;
    std::size_t probe_folds = 10;
    Pooling pooling = Pooling::Mean;
    SplitFractions split;
    std::uint64_t split_seed = 1;
    bool probe_repeats_set = false;
};

// `key = value` per line, '#' comments, dotted keys for nesting. Unknown
// keys and malformed values raise ValidationError naming the key.
FullConfig parse_config_text(const std::string& text);
FullConfig parse_config_file(const std::string& path);

// Loads (or generates) the dataset a config describes, preprocessing
// included.
Graph load_node_dataset(const DataConfig& data);
GraphSet load_graph_dataset(const DataConfig& data);

}  // namespace graphmae

// SPDX-License-Identifier: Apache-2.0

#include "graphmae/config.hpp"

#include <fstream>
#include <sstream>

#include "graphmae/errors.hpp"

namespace graphmae {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad number '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        unsigned long long x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ValidationError("config key '" + key + "': bad integer '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ValidationError("config key '" + key + "': bad boolean '" + v + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_u64(key, item));
    }
    if (out.empty()) throw ValidationError("config key '" + key + "': empty list");
    return out;
}

}  // namespace

FullConfig parse_config_text(const std::string& text) {
    FullConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line is not `key = value`", lineno);
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError("config line has empty key or value", lineno);

        if (key == "seed") cfg.run.seed = parse_u64(key, value);
        // data
        else if (key == "data.kind") {
            if (value == "sbm") cfg.data.kind = DataConfig::Kind::Sbm;
            else if (value == "files") cfg.data.kind = DataConfig::Kind::Files;
            else if (value == "graphset") cfg.data.kind = DataConfig::Kind::GraphSetDir;
            else throw ValidationError("config key 'data.kind': unknown kind '" + value + "'");
        }
        else if (key == "data.edges") cfg.data.edges = value;
        else if (key == "data.features") cfg.data.features = value;
        else if (key == "data.labels") cfg.data.labels = value;
        else if (key == "data.dir") cfg.data.dir = value;
        else if (key == "data.row_normalize") {
            cfg.data.row_normalize = parse_bool(key, value);
            cfg.data.row_normalize_set = true;
        }
        else if (key == "data.sbm.blocks") cfg.data.sbm_blocks = parse_size_list(key, value);
        else if (key == "data.sbm.p_in") cfg.data.sbm_p_in = parse_double(key, value);
        else if (key == "data.sbm.p_out") cfg.data.sbm_p_out = parse_double(key, value);
        else if (key == "data.sbm.feature_dim") cfg.data.sbm_features.dim = parse_u64(key, value);
        else if (key == "data.sbm.mean_scale")
            cfg.data.sbm_features.mean_scale = parse_double(key, value);
        else if (key == "data.sbm.noise_sigma")
            cfg.data.sbm_features.noise_sigma = parse_double(key, value);
        else if (key == "data.sbm.seed") cfg.data.sbm_seed = parse_u64(key, value);
        // split
        else if (key == "split.train") cfg.split.train = parse_double(key, value);
        else if (key == "split.val") cfg.split.val = parse_double(key, value);
        else if (key == "split.test") cfg.split.test = parse_double(key, value);
        else if (key == "split.seed") cfg.split_seed = parse_u64(key, value);
        // model
        else if (key == "encoder.kind") cfg.run.encoder_kind = layer_kind_from_string(value);
        else if (key == "encoder.layers") cfg.run.encoder_layers = parse_u64(key, value);
        else if (key == "encoder.heads") cfg.run.encoder_heads = parse_u64(key, value);
        else if (key == "decoder.kind") cfg.run.decoder_kind = layer_kind_from_string(value);
        else if (key == "decoder.layers") cfg.run.decoder_layers = parse_u64(key, value);
        else if (key == "decoder.heads") cfg.run.decoder_heads = parse_u64(key, value);
        else if (key == "negative_slope") cfg.run.negative_slope = parse_double(key, value);
        else if (key == "hidden_size") cfg.run.hidden_size = parse_u64(key, value);
        else if (key == "remask") cfg.run.remask_enabled = parse_bool(key, value);
        // masking
        else if (key == "mask_ratio") cfg.run.mask.mask_ratio = parse_double(key, value);
        else if (key == "replace_rate") cfg.run.mask.replace_rate = parse_double(key, value);
        // loss
        else if (key == "criterion") cfg.run.loss.criterion = criterion_from_string(value);
        else if (key == "gamma") cfg.run.loss.gamma = parse_double(key, value);
        else if (key == "eps_norm") cfg.run.loss.eps_norm = parse_double(key, value);
        // optimizer
        else if (key == "lr") cfg.run.optim.lr0 = parse_double(key, value);
        else if (key == "beta1") cfg.run.optim.beta1 = parse_double(key, value);
        else if (key == "beta2") cfg.run.optim.beta2 = parse_double(key, value);
        else if (key == "eps_adam") cfg.run.optim.eps_adam = parse_double(key, value);
        else if (key == "weight_decay") cfg.run.optim.weight_decay = parse_double(key, value);
        else if (key == "max_epoch") cfg.run.optim.max_epoch = parse_u64(key, value);
        else if (key == "batch_size") cfg.run.batch_size = parse_u64(key, value);
        else if (key == "pooling") cfg.pooling = pooling_from_string(value);
        // probe
        else if (key == "probe.lr") cfg.probe.lr = parse_double(key, value);
        else if (key == "probe.epochs") cfg.probe.epochs = parse_u64(key, value);
        else if (key == "probe.weight_decay") cfg.probe.weight_decay = parse_double(key, value);
        else if (key == "probe.repeats") {
            cfg.probe.repeats = parse_u64(key, value);
            cfg.probe_repeats_set = true;
        }
        else if (key == "probe.folds") cfg.probe_folds = parse_u64(key, value);
        else
            throw ValidationError("unknown config key '" + key + "'");
    }
    return cfg;
}

FullConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

Graph load_node_dataset(const DataConfig& data) {
    Graph g;
    switch (data.kind) {
        case DataConfig::Kind::Sbm:
            g = generate_sbm(data.sbm_blocks, data.sbm_p_in, data.sbm_p_out, data.sbm_features,
                             data.sbm_seed);
            break;
        case DataConfig::Kind::Files:
            if (data.edges.empty() || data.features.empty())
                throw ValidationError("data.kind=files requires data.edges and data.features");
            g = load_graph(data.edges, data.features, data.labels);
            break;
        case DataConfig::Kind::GraphSetDir:
            throw ValidationError("node-level command cannot run on a graph set; use graph-eval");
    }
    bool normalize = data.row_normalize_set ? data.row_normalize : true;
    return normalize ? row_normalize_features(g) : g;
}

GraphSet load_graph_dataset(const DataConfig& data) {
    if (data.kind != DataConfig::Kind::GraphSetDir)
        throw ValidationError("graph-level command requires data.kind = graphset");
    GraphSet gs = load_graph_set(data.dir);
    bool normalize = data.row_normalize_set ? data.row_normalize : false;
    if (normalize)
        for (auto& g : gs.graphs) g = row_normalize_features(g);
    return gs;
}

}  // namespace graphmae

// SPDX-License-Identifier: Apache-2.0

#include "graphmae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "graphmae/errors.hpp"
#include "graphmae/rng.hpp"

namespace fs = std::filesystem;

namespace graphmae {

int Graph::num_node_classes() const {
    int m = 0;
    for (int l : node_labels) m = std::max(m, l + 1);
    return m;
}

void Graph::check() const {
    adjacency.check_canonical();
    if (adjacency.n != n) throw ValidationError("graph: adjacency size != n");
    if (features.rows != n) throw ValidationError("graph: feature row count != n");
    if (!node_labels.empty()) {
        if (node_labels.size() != n) throw ValidationError("graph: label count != n");
        for (int l : node_labels)
            if (l < 0) throw ValidationError("graph: negative node label");
    }
}

void GraphSet::check() const {
    for (const auto& g : graphs) {
        g.check();
        if (!g.graph_label) throw ValidationError("graph set: member without graph label");
        if (*g.graph_label < 0 || *g.graph_label >= num_classes)
            throw ValidationError("graph set: label out of range");
        if (g.feature_dim() != feature_dim())
            throw ValidationError("graph set: inconsistent feature dimensionality");
    }
}

// --- text parsing helpers --------------------------------------------------

namespace {

std::vector<std::pair<std::size_t, std::size_t>> parse_edge_file(const std::string& path,
                                                                 std::size_t& max_node) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open edge file: " + path);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::string line;
    std::size_t lineno = 0;
    max_node = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        long long a, b;
        if (!(ls >> a)) continue;  // blank or comment-only line
        if (!(ls >> b)) throw ParseError("edge line needs two integers", lineno);
        std::string extra;
        if (ls >> extra) throw ParseError("trailing tokens after edge pair", lineno);
        if (a < 0 || b < 0) throw ParseError("negative node index", lineno);
        edges.emplace_back(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
        max_node = std::max({max_node, edges.back().first, edges.back().second});
    }
    return edges;
}

Tensor parse_feature_csv(std::istream& in, const std::string& path) {
    std::vector<double> values;
    std::size_t cols = 0, rows = 0, lineno = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::size_t row_cols = 0;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError("bad number '" + cell + "' in " + path, lineno);
            }
            ++row_cols;
        }
        if (row_cols == 0) throw ParseError("empty feature row", lineno);
        if (cols == 0)
            cols = row_cols;
        else if (row_cols != cols)
            throw ParseError("feature row has " + std::to_string(row_cols) + " columns, expected " +
                                 std::to_string(cols),
                             lineno);
        ++rows;
    }
    return Tensor(rows, cols, std::move(values));
}

constexpr char kFeatureMagic[6] = {'G', 'M', 'A', 'E', 'F', '1'};

std::uint64_t read_u64(std::istream& in, const std::string& what) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw FormatError("truncated " + what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | buf[i];
    return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::vector<int> parse_label_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open label file: " + path);
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            std::size_t used = 0;
            labels.push_back(std::stoi(line, &used));
        } catch (const std::exception&) {
            throw ParseError("bad label '" + line + "'", lineno);
        }
    }
    return labels;
}

}  // namespace

Tensor load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open feature file: " + path);
    char magic[6];
    in.read(magic, 6);
    if (in && std::memcmp(magic, kFeatureMagic, 6) == 0) {
        std::uint64_t n = read_u64(in, "feature header");
        std::uint64_t d = read_u64(in, "feature header");
        Tensor t(n, d);
        static_assert(sizeof(double) == 8);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(n * d * sizeof(double)));
        if (!in) throw FormatError("truncated feature payload in " + path);
        return t;
    }
    in.clear();
    in.seekg(0);
    return parse_feature_csv(in, path);
}

void save_features_binary(const Tensor& features, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write feature file: " + path);
    out.write(kFeatureMagic, 6);
    write_u64(out, features.rows);
    write_u64(out, features.cols);
    out.write(reinterpret_cast<const char*>(features.data.data()),
              static_cast<std::streamsize>(features.size() * sizeof(double)));
}

Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path) {
    std::size_t max_node = 0;
    auto edges = parse_edge_file(edge_path, max_node);
    Graph g;
    g.features = load_features(feature_path);
    g.n = g.features.rows;
    if (!edges.empty() && max_node >= g.n)
        throw ValidationError("edge references node " + std::to_string(max_node) + " but only " +
                              std::to_string(g.n) + " feature rows exist");
    g.adjacency = csr_from_undirected_edges(g.n, edges);
    if (!label_path.empty()) {
        g.node_labels = parse_label_file(label_path);
        if (g.node_labels.size() != g.n)
            throw ValidationError("label count " + std::to_string(g.node_labels.size()) +
                                  " != node count " + std::to_string(g.n));
    }
    g.name = fs::path(edge_path).stem().string();
    g.check();
    return g;
}

void save_graph(const Graph& g, const std::string& edge_path, const std::string& feature_path,
                const std::string& label_path) {
    std::ofstream out(edge_path);
    if (!out) throw ValidationError("cannot write edge file: " + edge_path);
    for (std::size_t i = 0; i < g.n; ++i)
        for (std::size_t c : g.adjacency.neighbors(i))
            if (i <= c) out << i << " " << c << "\n";
    save_features_binary(g.features, feature_path);
    if (!label_path.empty() && g.has_node_labels()) {
        std::ofstream lout(label_path);
        for (int l : g.node_labels) lout << l << "\n";
    }
}

GraphSet load_graph_set(const std::string& dir) {
    std::ifstream manifest(fs::path(dir) / "labels.txt");
    if (!manifest) throw ValidationError("cannot open graph set manifest: " + dir + "/labels.txt");
    GraphSet gs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(manifest, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string name;
        int label;
        if (!(ls >> name >> label)) throw ParseError("manifest line needs `name label`", lineno);
        fs::path sub = fs::path(dir) / name;
        std::string features = fs::exists(sub / "features.bin") ? (sub / "features.bin").string()
                                                                : (sub / "features.csv").string();
        Graph g = load_graph((sub / "edges.txt").string(), features);
        g.name = name;
        g.graph_label = label;
        gs.num_classes = std::max(gs.num_classes, label + 1);
        gs.graphs.push_back(std::move(g));
    }
    gs.check();
    return gs;
}

void save_graph_set(const GraphSet& gs, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "labels.txt");
    for (const auto& g : gs.graphs) {
        fs::path sub = fs::path(dir) / g.name;
        fs::create_directories(sub);
        save_graph(g, (sub / "edges.txt").string(), (sub / "features.bin").string());
        manifest << g.name << " " << g.graph_label.value_or(0) << "\n";
    }
}

Graph row_normalize_features(const Graph& g) {
    Graph out = g;
    for (std::size_t i = 0; i < out.features.rows; ++i) {
        auto row = out.features.row(i);
        double sq = 0.0;
        for (double v : row) sq += v * v;
        if (sq > 0.0) {
            double inv = 1.0 / std::sqrt(sq);
            for (double& v : row) v *= inv;
        }
    }
    return out;
}

Graph merge_block_diagonal(const std::vector<const Graph*>& graphs) {
    if (graphs.empty()) throw ValidationError("merge: no graphs");
    std::size_t d = graphs[0]->feature_dim();
    std::size_t n = 0;
    std::size_t nnz = 0;
    for (const Graph* g : graphs) {
        if (g->feature_dim() != d) throw ValidationError("merge: feature dims differ");
        n += g->n;
        nnz += g->adjacency.nnz();
    }
    Graph out;
    out.n = n;
    out.name = "batch";
    out.features = Tensor(n, d);
    out.adjacency.n = n;
    out.adjacency.row_offsets.assign(1, 0);
    out.adjacency.col_indices.reserve(nnz);
    out.adjacency.edge_values.reserve(nnz);
    std::size_t base = 0;
    for (const Graph* g : graphs) {
        for (std::size_t i = 0; i < g->n; ++i) {
            std::copy(g->features.row(i).begin(), g->features.row(i).end(),
                      out.features.row(base + i).begin());
            for (std::size_t k = g->adjacency.row_offsets[i]; k < g->adjacency.row_offsets[i + 1];
                 ++k) {
                out.adjacency.col_indices.push_back(base + g->adjacency.col_indices[k]);
                out.adjacency.edge_values.push_back(g->adjacency.edge_values[k]);
            }
            out.adjacency.row_offsets.push_back(out.adjacency.col_indices.size());
        }
        base += g->n;
    }
    out.check();
    return out;
}

Graph generate_sbm(const std::vector<std::size_t>& blocks, double p_in, double p_out,
                   const SbmFeatureSpec& feature_spec, std::uint64_t seed) {
    if (p_in < 0 || p_in > 1 || p_out < 0 || p_out > 1)
        throw ValidationError("sbm: probabilities must lie in [0,1]");
    for (std::size_t b : blocks)
        if (b == 0) throw ValidationError("sbm: block sizes must be positive");

    std::size_t n = 0;
    std::vector<int> block_of;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        n += blocks[b];
        block_of.insert(block_of.end(), blocks[b], static_cast<int>(b));
    }

    Rng edge_rng(Rng::mix(seed, 0));
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double p = block_of[i] == block_of[j] ? p_in : p_out;
            if (edge_rng.uniform() < p) edges.emplace_back(i, j);
        }

    Rng feat_rng(Rng::mix(seed, 1));
    Tensor means(blocks.size(), feature_spec.dim);
    for (double& v : means.data) v = feature_spec.mean_scale * feat_rng.normal();
    Tensor x(n, feature_spec.dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < feature_spec.dim; ++j)
            x.at(i, j) = means.at(block_of[i], j) + feature_spec.noise_sigma * feat_rng.normal();

    Graph g;
    g.n = n;
    g.adjacency = csr_from_undirected_edges(n, edges);
    g.features = std::move(x);
    g.node_labels = std::move(block_of);
    g.name = "sbm";
    g.check();
    return g;
}

NodeSplit split_nodes(const Graph& g, const SplitFractions& f, std::uint64_t seed) {
    if (f.train < 0 || f.val < 0 || f.test < 0 || f.train + f.val + f.test > 1.0 + 1e-12)
        throw ValidationError("split fractions must be nonnegative and sum to at most 1");

    // group indices by class (single group when unlabeled)
    std::vector<std::vector<std::size_t>> groups;
    if (g.has_node_labels()) {
        groups.resize(g.num_node_classes());
        for (std::size_t i = 0; i < g.n; ++i) groups[g.node_labels[i]].push_back(i);
    } else {
        groups.emplace_back();
        for (std::size_t i = 0; i < g.n; ++i) groups[0].push_back(i);
    }

    Rng rng(Rng::mix(seed, 2));
    NodeSplit split;
    for (auto& grp : groups) {
        if (grp.empty()) continue;
        // seeded Fisher-Yates
        for (std::size_t i = grp.size(); i > 1; --i)
            std::swap(grp[i - 1], grp[rng.uniform_int(i)]);
        std::size_t m = grp.size();
        auto n_tr = static_cast<std::size_t>(std::floor(f.train * static_cast<double>(m)));
        auto n_val = static_cast<std::size_t>(std::floor(f.val * static_cast<double>(m)));
        auto n_te = static_cast<std::size_t>(std::floor(f.test * static_cast<double>(m)));
        if (f.train > 0 && n_tr == 0)
            throw ValidationError("split: a class with " + std::to_string(m) +
                                  " members is too small for the requested train fraction");
        std::size_t k = 0;
        for (std::size_t i = 0; i < n_tr; ++i) split.train_idx.push_back(grp[k++]);
        for (std::size_t i = 0; i < n_val; ++i) split.val_idx.push_back(grp[k++]);
        for (std::size_t i = 0; i < n_te && k < m; ++i) split.test_idx.push_back(grp[k++]);
    }
    std::sort(split.train_idx.begin(), split.train_idx.end());
    std::sort(split.val_idx.begin(), split.val_idx.end());
    std::sort(split.test_idx.begin(), split.test_idx.end());
    return split;
}

}  // namespace graphmae

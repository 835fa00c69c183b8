// SPDX-License-Identifier: Apache-2.0

#include "graphmae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "graphmae/errors.hpp"
#include "graphmae/optim.hpp"
#include "graphmae/rng.hpp"

namespace graphmae {

using nlohmann::json;

Pooling pooling_from_string(const std::string& s) {
    if (s == "mean") return Pooling::Mean;
    if (s == "max") return Pooling::Max;
    if (s == "sum") return Pooling::Sum;
    throw ValidationError("unknown pooling: " + s);
}

std::string to_string(Pooling p) {
    switch (p) {
        case Pooling::Mean: return "mean";
        case Pooling::Max: return "max";
        case Pooling::Sum: return "sum";
    }
    return "?";
}

void ProbeConfig::validate() const {
    if (lr <= 0 || epochs == 0 || repeats == 0 || weight_decay < 0)
        throw ValidationError("probe config: lr/epochs/repeats must be positive");
}

void EvalReport::recompute_stats() {
    if (values.empty()) {
        mean = stdev = 0.0;
        return;
    }
    double s = 0.0;
    for (double v : values) s += v;
    mean = s / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    stdev = std::sqrt(sq / static_cast<double>(values.size()));
}

std::string EvalReport::to_json() const {
    json j{{"task", task},
           {"classifier", classifier},
           {"mean", mean},
           {"std", stdev},
           {"values", values},
           {"config",
            {{"lr", config.lr},
             {"epochs", config.epochs},
             {"weight_decay", config.weight_decay},
             {"repeats", config.repeats}}}};
    if (!fold_of.empty()) j["fold_of"] = fold_of;
    return j.dump(2);
}

Tensor embed(const Model& encoder, const Graph& g) {
    if (encoder.input_dim() != 0 && encoder.input_dim() != g.feature_dim())
        throw ValidationError("embed: encoder expects " + std::to_string(encoder.input_dim()) +
                              "-dim features, graph has " + std::to_string(g.feature_dim()));
    PreparedGraph pg = PreparedGraph::from(g.adjacency);
    return forward_frozen(encoder, pg, g.features);
}

Tensor readout(const Tensor& h, Pooling pooling) {
    if (h.rows == 0) throw ValidationError("readout: empty graph");
    Tensor out(1, h.cols);
    switch (pooling) {
        case Pooling::Sum:
        case Pooling::Mean:
            for (std::size_t i = 0; i < h.rows; ++i)
                for (std::size_t j = 0; j < h.cols; ++j) out.at(0, j) += h.at(i, j);
            if (pooling == Pooling::Mean)
                for (double& v : out.data) v /= static_cast<double>(h.rows);
            break;
        case Pooling::Max:
            for (std::size_t j = 0; j < h.cols; ++j) {
                double m = h.at(0, j);
                for (std::size_t i = 1; i < h.rows; ++i) m = std::max(m, h.at(i, j));
                out.at(0, j) = m;
            }
            break;
    }
    return out;
}

namespace {

struct LinearClassifier {
    Parameter w, b;
};

LinearClassifier train_linear_classifier(const Tensor& x, const std::vector<int>& y,
                                         int num_classes, const ProbeConfig& cfg,
                                         std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 6));
    std::size_t d = x.cols;
    Tensor w0(d, num_classes);
    double a = std::sqrt(6.0 / static_cast<double>(d + num_classes));
    for (double& v : w0.data) v = a * (2.0 * rng.uniform() - 1.0);
    LinearClassifier clf{Parameter("probe.W", std::move(w0)),
                         Parameter("probe.b", Tensor(1, num_classes))};

    std::vector<Parameter*> params{&clf.w, &clf.b};
    OptimConfig opt;
    opt.lr0 = cfg.lr;
    opt.weight_decay = cfg.weight_decay;
    opt.max_epoch = cfg.epochs;
    AdamState state;
    state.init(params);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (Parameter* p : params) p->zero_grad();
        Tape tape;
        NodeId logits = tape.add(tape.matmul(tape.constant(x), tape.watch(clf.w)),
                                 tape.watch(clf.b));
        NodeId loss = tape.softmax_cross_entropy(logits, y);
        tape.backward(loss);
        adam_step(params, state, cfg.lr, opt);
    }
    return clf;
}

double classifier_accuracy(const LinearClassifier& clf, const Tensor& x,
                           const std::vector<int>& y) {
    if (x.rows == 0) throw ValidationError("probe: empty evaluation set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        std::size_t best = 0;
        double best_score = -1e300;
        for (std::size_t c = 0; c < clf.w.value.cols; ++c) {
            double s = clf.b.value.at(0, c);
            for (std::size_t j = 0; j < x.cols; ++j)
                s += x.at(i, j) * clf.w.value.at(j, c);
            if (s > best_score) {
                best_score = s;
                best = c;
            }
        }
        if (static_cast<int>(best) == y[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(x.rows);
}

Tensor select_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
    Tensor out(idx.size(), x.cols);
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(x.row(idx[i]).begin(), x.row(idx[i]).end(), out.row(i).begin());
    return out;
}

std::vector<int> select_labels(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(y[i]);
    return out;
}

}  // namespace

EvalReport linear_probe(const Tensor& h, const std::vector<int>& labels, const NodeSplit& split,
                        const ProbeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (labels.size() != h.rows) throw ValidationError("probe: label count != embedding rows");
    for (std::size_t i : split.train_idx)
        if (i >= h.rows) throw ValidationError("probe: split index out of range");
    if (split.train_idx.empty() || split.test_idx.empty())
        throw ValidationError("probe: train and test sets must be nonempty");

    Tensor x_train = select_rows(h, split.train_idx);
    std::vector<int> y_train = select_labels(labels, split.train_idx);
    Tensor x_test = select_rows(h, split.test_idx);
    std::vector<int> y_test = select_labels(labels, split.test_idx);

    std::set<int> train_classes(y_train.begin(), y_train.end());
    if (train_classes.size() < 2)
        throw ValidationError("probe: training set has a single class");
    int num_classes = 0;
    for (int y : labels) num_classes = std::max(num_classes, y + 1);

    EvalReport report;
    report.task = "node_probe";
    report.config = cfg;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        auto clf = train_linear_classifier(x_train, y_train, num_classes, cfg,
                                           Rng::mix(seed, 7000 + r));
        report.values.push_back(classifier_accuracy(clf, x_test, y_test));
    }
    report.recompute_stats();
    return report;
}

EvalReport kfold_graph_eval(const GraphSet& gs, const Model& encoder, Pooling pooling,
                            std::size_t k, std::size_t repeats, const ProbeConfig& cfg,
                            std::uint64_t seed) {
    cfg.validate();
    gs.check();
    if (k < 2 || k > gs.size()) throw ValidationError("kfold: need 2 <= k <= |graphs|");
    if (repeats == 0) throw ValidationError("kfold: repeats must be positive");

    // pooled embedding per graph
    Tensor x(gs.size(), 0);
    for (std::size_t i = 0; i < gs.size(); ++i) {
        Tensor pooled = readout(embed(encoder, gs.graphs[i]), pooling);
        if (i == 0) x = Tensor(gs.size(), pooled.cols);
        std::copy(pooled.data.begin(), pooled.data.end(), x.row(i).begin());
    }
    std::vector<int> y;
    for (const auto& g : gs.graphs) y.push_back(*g.graph_label);

    // stratified fold assignment: per class, seeded shuffle then round-robin
    std::vector<std::size_t> fold_of(gs.size());
    Rng fold_rng(Rng::mix(seed, 8));
    for (int c = 0; c < gs.num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < gs.size(); ++i)
            if (y[i] == c) members.push_back(i);
        if (members.size() < k)
            throw ValidationError("kfold: class " + std::to_string(c) + " has " +
                                  std::to_string(members.size()) + " members, fewer than k=" +
                                  std::to_string(k));
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[fold_rng.uniform_int(i)]);
        for (std::size_t i = 0; i < members.size(); ++i) fold_of[members[i]] = i % k;
    }

    EvalReport report;
    report.task = "graph_kfold";
    report.config = cfg;
    report.fold_of = fold_of;
    for (std::size_t r = 0; r < repeats; ++r) {
        for (std::size_t f = 0; f < k; ++f) {
            std::vector<std::size_t> train_idx, test_idx;
            for (std::size_t i = 0; i < gs.size(); ++i)
                (fold_of[i] == f ? test_idx : train_idx).push_back(i);
            auto clf = train_linear_classifier(select_rows(x, train_idx),
                                               select_labels(y, train_idx), gs.num_classes, cfg,
                                               Rng::mix(seed, 9000 + r * k + f));
            report.values.push_back(
                classifier_accuracy(clf, select_rows(x, test_idx), select_labels(y, test_idx)));
        }
    }
    report.recompute_stats();
    return report;
}

}  // namespace graphmae

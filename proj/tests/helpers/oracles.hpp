// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations for the test suites. Everything
// here is written against dense matrices with plain scalar loops and never
// calls into the sparse/tape code paths it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphmae/csr.hpp"
#include "graphmae/layers.hpp"
#include "graphmae/tensor.hpp"

namespace oracle {

using graphmae::CsrAdjacency;
using graphmae::Layer;
using graphmae::Tensor;

inline Tensor dense_from_csr(const CsrAdjacency& adj) {
    Tensor a(adj.n, adj.n);
    for (std::size_t i = 0; i < adj.n; ++i)
        for (std::size_t k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k)
            a.at(i, adj.col_indices[k]) = adj.edge_values[k];
    return a;
}

inline Tensor dense_matmul(const Tensor& a, const Tensor& b) {
    Tensor c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += a.at(i, k) * b.at(k, j);
            c.at(i, j) = s;
        }
    return c;
}

// D^{-1/2} (A + I) D^{-1/2} built densely from the raw adjacency
inline Tensor dense_gcn_normalize(const CsrAdjacency& raw) {
    Tensor a = dense_from_csr(raw);
    for (std::size_t i = 0; i < a.rows; ++i) a.at(i, i) = 1.0;
    std::vector<double> deg(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) deg[i] += a.at(i, j) != 0.0 ? 1.0 : 0.0;
    Tensor out(a.rows, a.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j)
            if (a.at(i, j) != 0.0) out.at(i, j) = a.at(i, j) / std::sqrt(deg[i] * deg[j]);
    return out;
}

inline Tensor prelu_rows(const Tensor& x, const Tensor& slope) {
    Tensor out = x;
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j)
            if (out.at(i, j) < 0.0)
                out.at(i, j) *= slope.cols == 1 ? slope.at(0, 0) : slope.at(0, j);
    return out;
}

// finds a layer parameter by id suffix
inline const Tensor& param_of(const Layer& layer, const std::string& suffix) {
    for (const auto& p : layer.params)
        if (p.id.size() >= suffix.size() &&
            p.id.compare(p.id.size() - suffix.size(), suffix.size(), suffix) == 0)
            return p.value;
    throw std::runtime_error("oracle: no parameter ends with " + suffix);
}

inline Tensor maybe_activation(const Layer& layer, Tensor x) {
    if (layer.cfg.activation == graphmae::Activation::PReLU)
        return prelu_rows(x, param_of(layer, ".prelu"));
    return x;
}

// GCN: activation(D^{-1/2}(A+I)D^{-1/2} H W), straight from the dense formula
inline Tensor dense_gcn_layer(const Layer& layer, const CsrAdjacency& raw, const Tensor& h) {
    Tensor normalized = dense_gcn_normalize(raw);
    Tensor out = dense_matmul(dense_matmul(normalized, h), param_of(layer, ".W"));
    return maybe_activation(layer, out);
}

// GAT per the written formula: e_ij = leaky_relu(a_src.(W h_i) + a_dst.(W h_j))
// over j in N(i) (self-loops included), alpha = softmax, out_i = sum alpha W h_j
inline Tensor dense_gat_layer(const Layer& layer, const CsrAdjacency& raw, const Tensor& h) {
    std::size_t n = h.rows;
    Tensor adj = dense_from_csr(raw);
    for (std::size_t i = 0; i < n; ++i) adj.at(i, i) = 1.0;

    std::vector<Tensor> head_out;
    for (std::size_t hd = 0; hd < layer.cfg.heads; ++hd) {
        std::string hp = ".h" + std::to_string(hd);
        const Tensor& w = param_of(layer, hp + ".W");
        const Tensor& a_src = param_of(layer, hp + ".a_src");
        const Tensor& a_dst = param_of(layer, hp + ".a_dst");
        Tensor hw = dense_matmul(h, w);
        std::vector<double> s_src(n, 0.0), s_dst(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < hw.cols; ++k) {
                s_src[i] += hw.at(i, k) * a_src.at(k, 0);
                s_dst[i] += hw.at(i, k) * a_dst.at(k, 0);
            }
        Tensor out(n, hw.cols);
        for (std::size_t i = 0; i < n; ++i) {
            // softmax over neighbors with max subtraction
            double mx = -1e300;
            for (std::size_t j = 0; j < n; ++j)
                if (adj.at(i, j) != 0.0) {
                    double e = s_src[i] + s_dst[j];
                    if (e < 0) e *= layer.cfg.negative_slope;
                    mx = std::max(mx, e);
                }
            double z = 0.0;
            std::vector<double> alpha(n, 0.0);
            for (std::size_t j = 0; j < n; ++j)
                if (adj.at(i, j) != 0.0) {
                    double e = s_src[i] + s_dst[j];
                    if (e < 0) e *= layer.cfg.negative_slope;
                    alpha[j] = std::exp(e - mx);
                    z += alpha[j];
                }
            for (std::size_t j = 0; j < n; ++j)
                if (alpha[j] != 0.0)
                    for (std::size_t k = 0; k < hw.cols; ++k)
                        out.at(i, k) += alpha[j] / z * hw.at(j, k);
        }
        head_out.push_back(std::move(out));
    }

    Tensor combined;
    if (layer.cfg.concat_heads) {
        combined = Tensor(n, layer.cfg.heads * layer.cfg.out_dim);
        for (std::size_t hd = 0; hd < head_out.size(); ++hd)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < layer.cfg.out_dim; ++k)
                    combined.at(i, hd * layer.cfg.out_dim + k) = head_out[hd].at(i, k);
    } else {
        combined = Tensor(n, layer.cfg.out_dim);
        for (const auto& ho : head_out)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < layer.cfg.out_dim; ++k)
                    combined.at(i, k) += ho.at(i, k) / static_cast<double>(head_out.size());
    }
    return maybe_activation(layer, combined);
}

// GIN: MLP((1+eps) h_i + sum_{j in N(i)} h_j), raw adjacency, 2-layer MLP
inline Tensor dense_gin_layer(const Layer& layer, const CsrAdjacency& raw, const Tensor& h) {
    Tensor adj = dense_from_csr(raw);
    double eps = layer.cfg.gin_eps_learnable ? param_of(layer, ".eps").at(0, 0) : 0.0;
    Tensor x(h.rows, h.cols);
    for (std::size_t i = 0; i < h.rows; ++i)
        for (std::size_t k = 0; k < h.cols; ++k) {
            double s = (1.0 + eps) * h.at(i, k);
            for (std::size_t j = 0; j < h.rows; ++j) s += adj.at(i, j) * h.at(j, k);
            x.at(i, k) = s;
        }
    Tensor hidden = dense_matmul(x, param_of(layer, ".W1"));
    const Tensor& b1 = param_of(layer, ".b1");
    for (std::size_t i = 0; i < hidden.rows; ++i)
        for (std::size_t j = 0; j < hidden.cols; ++j) hidden.at(i, j) += b1.at(0, j);
    hidden = prelu_rows(hidden, param_of(layer, ".mlp_slope"));
    Tensor out = dense_matmul(hidden, param_of(layer, ".W2"));
    const Tensor& b2 = param_of(layer, ".b2");
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j) out.at(i, j) += b2.at(0, j);
    return maybe_activation(layer, out);
}

inline Tensor dense_mlp_layer(const Layer& layer, const Tensor& h) {
    Tensor out = dense_matmul(h, param_of(layer, ".W"));
    const Tensor& b = param_of(layer, ".b");
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j) out.at(i, j) += b.at(0, j);
    return maybe_activation(layer, out);
}

inline Tensor dense_layer(const Layer& layer, const CsrAdjacency& raw, const Tensor& h) {
    switch (layer.cfg.kind) {
        case graphmae::LayerKind::GCN: return dense_gcn_layer(layer, raw, h);
        case graphmae::LayerKind::GAT: return dense_gat_layer(layer, raw, h);
        case graphmae::LayerKind::GIN: return dense_gin_layer(layer, raw, h);
        case graphmae::LayerKind::MLP: return dense_mlp_layer(layer, h);
    }
    throw std::runtime_error("oracle: bad kind");
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return 1e300;
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a.data[k] - b.data[k]));
    return m;
}

// --- chi-square survival function -------------------------------------------
// Q(k/2, x/2) via the regularized incomplete gamma function (series for
// x < a+1, continued fraction otherwise).

inline double gamma_series_p(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_cf_q(double a, double x) {
    double b = x + 1.0 - a, c = 1e300, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// P(X > x) for X ~ chi-square with k degrees of freedom
inline double chi_square_sf(double x, double k) {
    if (x <= 0) return 1.0;
    double a = 0.5 * k, xx = 0.5 * x;
    return xx < a + 1.0 ? 1.0 - gamma_series_p(a, xx) : gamma_cf_q(a, xx);
}

// --- misc fixtures -----------------------------------------------------------

inline CsrAdjacency random_graph(std::size_t n, double p, graphmae::Rng& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.uniform() < p) edges.emplace_back(i, j);
    return graphmae::csr_from_undirected_edges(n, edges);
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, graphmae::Rng& rng) {
    Tensor t(rows, cols);
    for (double& v : t.data) v = 2.0 * rng.uniform() - 1.0;
    return t;
}

}  // namespace oracle

// SPDX-License-Identifier: Apache-2.0

#include "graphmae/csr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graphmae/errors.hpp"

namespace graphmae {

bool CsrAdjacency::has_arc(std::size_t src, std::size_t dst) const {
    auto nb = neighbors(src);
    return std::binary_search(nb.begin(), nb.end(), dst);
}

void CsrAdjacency::check_canonical() const {
    if (row_offsets.size() != n + 1 || row_offsets.front() != 0 ||
        row_offsets.back() != col_indices.size())
        throw ValidationError("csr: bad row offsets");
    if (edge_values.size() != col_indices.size())
        throw ValidationError("csr: edge_values length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (row_offsets[i] > row_offsets[i + 1]) throw ValidationError("csr: decreasing offsets");
        for (std::size_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
            if (col_indices[k] >= n) throw ValidationError("csr: column index out of range");
            if (k > row_offsets[i] && col_indices[k] <= col_indices[k - 1])
                throw ValidationError("csr: row " + std::to_string(i) + " not strictly increasing");
        }
    }
}

CsrAdjacency csr_from_arcs(std::size_t n,
                           std::vector<std::pair<std::size_t, std::size_t>> arcs) {
    for (const auto& [s, d] : arcs)
        if (s >= n || d >= n)
            throw ValidationError("arc (" + std::to_string(s) + "," + std::to_string(d) +
                                  ") out of range for n=" + std::to_string(n));
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());

    CsrAdjacency adj;
    adj.n = n;
    adj.row_offsets.assign(n + 1, 0);
    for (const auto& [s, d] : arcs) ++adj.row_offsets[s + 1];
    for (std::size_t i = 0; i < n; ++i) adj.row_offsets[i + 1] += adj.row_offsets[i];
    adj.col_indices.reserve(arcs.size());
    for (const auto& [s, d] : arcs) adj.col_indices.push_back(d);
    adj.edge_values.assign(arcs.size(), 1.0);
    return adj;
}

CsrAdjacency csr_from_undirected_edges(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    arcs.reserve(edges.size() * 2);
    for (const auto& [a, b] : edges) {
        arcs.emplace_back(a, b);
        arcs.emplace_back(b, a);
    }
    return csr_from_arcs(n, std::move(arcs));
}

CsrAdjacency add_self_loops(const CsrAdjacency& adj) {
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    arcs.reserve(adj.nnz() + adj.n);
    for (std::size_t i = 0; i < adj.n; ++i) {
        arcs.emplace_back(i, i);
        for (std::size_t c : adj.neighbors(i)) arcs.emplace_back(i, c);
    }
    return csr_from_arcs(adj.n, std::move(arcs));
}

CsrAdjacency gcn_normalize(const CsrAdjacency& adj_with_loops) {
    const auto& a = adj_with_loops;
    std::vector<double> deg(a.n);
    for (std::size_t i = 0; i < a.n; ++i) {
        deg[i] = static_cast<double>(a.degree(i));
        if (deg[i] == 0.0)
            throw ValidationError("gcn_normalize: node " + std::to_string(i) +
                                  " has degree 0 (self-loops missing?)");
    }
    CsrAdjacency out = a;
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k)
            out.edge_values[k] = 1.0 / std::sqrt(deg[i] * deg[a.col_indices[k]]);
    return out;
}

CsrAdjacency csr_transpose(const CsrAdjacency& adj) {
    std::vector<std::pair<std::size_t, std::size_t>> arcs;
    arcs.reserve(adj.nnz());
    CsrAdjacency out;
    out.n = adj.n;
    out.row_offsets.assign(adj.n + 1, 0);
    for (std::size_t i = 0; i < adj.n; ++i)
        for (std::size_t c : adj.neighbors(i)) ++out.row_offsets[c + 1];
    for (std::size_t i = 0; i < adj.n; ++i) out.row_offsets[i + 1] += out.row_offsets[i];
    out.col_indices.resize(adj.nnz());
    out.edge_values.resize(adj.nnz());
    std::vector<std::size_t> cursor(out.row_offsets.begin(), out.row_offsets.end() - 1);
    for (std::size_t i = 0; i < adj.n; ++i)
        for (std::size_t k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k) {
            std::size_t c = adj.col_indices[k];
            out.col_indices[cursor[c]] = i;
            out.edge_values[cursor[c]] = adj.edge_values[k];
            ++cursor[c];
        }
    return out;
}

}  // namespace graphmae

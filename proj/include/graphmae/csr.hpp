// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace graphmae {

// Compressed sparse row adjacency. Canonical form: within each row the
// column indices are strictly increasing (implies deduplicated).
struct CsrAdjacency {
    std::size_t n = 0;
    std::vector<std::size_t> row_offsets;  // length n+1, nondecreasing
    std::vector<std::size_t> col_indices;
    std::vector<double> edge_values;  // 1.0 for unweighted

    CsrAdjacency() : row_offsets{0} {}

    std::size_t nnz() const { return col_indices.size(); }
    std::size_t degree(std::size_t i) const { return row_offsets[i + 1] - row_offsets[i]; }

    std::span<const std::size_t> neighbors(std::size_t i) const {
        return {col_indices.data() + row_offsets[i], degree(i)};
    }
    std::span<const double> values(std::size_t i) const {
        return {edge_values.data() + row_offsets[i], degree(i)};
    }

    bool has_arc(std::size_t src, std::size_t dst) const;

    // Validates offsets, index range, and canonical ordering; throws
    // ValidationError on violation.
    void check_canonical() const;
};

// Builds a canonical CSR from directed arcs (duplicates removed). Arcs with
// endpoints outside [0, n) are a ValidationError.
CsrAdjacency csr_from_arcs(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> arcs);

// Symmetrizes an undirected edge list: every edge is stored both directions.
CsrAdjacency csr_from_undirected_edges(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// Every node gains arc (i,i) exactly once; existing self-loops kept as-is.
CsrAdjacency add_self_loops(const CsrAdjacency& adj);

// D^{-1/2} (A) D^{-1/2} with degrees taken from the given adjacency, which
// must already contain self-loops (zero-degree node is a ValidationError).
CsrAdjacency gcn_normalize(const CsrAdjacency& adj_with_loops);

// Transpose (for symmetric graphs this is a no-op in structure, but layers
// stay correct on any input).
CsrAdjacency csr_transpose(const CsrAdjacency& adj);

}  // namespace graphmae

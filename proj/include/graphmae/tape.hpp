// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "graphmae/csr.hpp"
#include "graphmae/tensor.hpp"

namespace graphmae {

using NodeId = std::size_t;

// A trainable tensor with its gradient accumulator. Gradients are zeroed by
// the optimizer at the start of each step and filled by Tape::backward.
struct Parameter {
    std::string id;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string id_, Tensor value_)
        : id(std::move(id_)), value(std::move(value_)), grad(value.rows, value.cols) {}

    void zero_grad() { grad.fill(0.0); }
};

// Reverse-mode tape over dense f64 tensors plus the two sparse primitives
// GNN layers need (CSR aggregation and per-neighborhood softmax).
//
// Usage: record a forward pass through the op methods, then call
// backward(loss) on a scalar node. Gradients of watched Parameters are
// accumulated (+=) into Parameter::grad, so several losses can be combined
// by calling backward once per loss on the same or fresh tapes.
//
// A tape and its tensors are confined to one thread. CsrAdjacency arguments
// are captured by pointer and must outlive the backward pass.
//
// Every op validates shapes (ValidationError), checks domains
// (NumericDomainError), and verifies its output is finite.
class Tape {
public:
    // --- leaves ---
    NodeId constant(Tensor v);      // no gradient tracked
    NodeId watch(Parameter& p);     // leaf bound to a Parameter

    // --- dense op family ---
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    // same shape, or b a 1 x cols row vector broadcast over a's rows
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);  // elementwise, same shape
    NodeId scalar_mul(NodeId a, double s);
    NodeId mul_scalar_node(NodeId a, NodeId s);  // s is a 1x1 node
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId gather_rows(NodeId a, std::vector<std::size_t> indices);
    // out has out_rows rows; out[indices[i]] = a[i], other rows zero.
    // Duplicate indices are a ValidationError.
    NodeId scatter_rows(NodeId a, std::vector<std::size_t> indices, std::size_t out_rows);
    NodeId sum_all(NodeId a);    // 1x1
    NodeId mean_all(NodeId a);   // 1x1
    NodeId row_sum(NodeId a);    // n x d -> n x 1
    // x^p elementwise; negative base requires integer p (else domain error).
    // p == 1 is an exact passthrough.
    NodeId power(NodeId a, double exponent);
    NodeId leaky_relu(NodeId a, double negative_slope);
    // slope is 1 x cols (per-channel) or 1 x 1 (shared)
    NodeId prelu(NodeId a, NodeId slope);
    NodeId exp(NodeId a);
    NodeId log(NodeId a);  // requires x > 0
    // max(||row||_2, eps_floor) as an n x 1 column
    NodeId l2_norm_rows(NodeId a, double eps_floor);

    // --- graph primitives ---
    // out[i] = sum over arcs (i,j): edge_value * h[j]
    NodeId spmm(const CsrAdjacency& adj, NodeId h);
    // per-arc score s_row[i] + s_col[j] for arc (i,j); inputs n x 1
    NodeId arc_scores(NodeId s_row, NodeId s_col, const CsrAdjacency& adj);
    // softmax within each destination node's arc segment (max-subtracted)
    NodeId segment_softmax(NodeId arc_logits, const CsrAdjacency& adj);
    // out[i] = sum over arcs (i,j): w_arc * h[j]; w is nnz x 1
    NodeId spmm_arc_weighted(NodeId arc_weights, const CsrAdjacency& adj, NodeId h);

    // --- masking / training heads ---
    // copy of h with the given rows replaced by the 1 x cols token row;
    // gradients flow into both h (non-overwritten rows) and the token
    NodeId overwrite_rows_with_token(NodeId h, NodeId token, std::vector<std::size_t> rows);
    // mean over rows of -log softmax(logits)[label]; fused backward
    NodeId softmax_cross_entropy(NodeId logits, std::vector<int> labels);

    // --- access / reverse sweep ---
    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    std::size_t size() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1, sweeps ops in reverse recording order,
    // then accumulates each watched Parameter's gradient. The loss node
    // must be 1x1.
    void backward(NodeId loss);

private:
    struct Node {
        Tensor value;
        bool needs_grad = false;
        std::function<void(Tape&)> backward_fn;  // empty for leaves
        Parameter* param = nullptr;              // set for watched leaves
    };

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;  // parallel to nodes_, live during backward

    NodeId emit(Tensor value, bool needs_grad, std::function<void(Tape&)> backward_fn,
                const char* what);
    Tensor& grad(NodeId id) { return grads_[id]; }
    bool needs(NodeId id) const { return nodes_[id].needs_grad; }
};

}  // namespace graphmae

// SPDX-License-Identifier: Apache-2.0

#include "graphmae/tape.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "graphmae/errors.hpp"

namespace graphmae {

namespace {

// C += A * B, ikj order (deterministic, cache-friendly)
void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * c.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

Tensor matmul_raw(const Tensor& a, const Tensor& b) {
    Tensor c(a.rows, b.cols);
    matmul_acc(a, b, c);
    return c;
}

Tensor transpose_raw(const Tensor& a) {
    Tensor t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

bool is_small_integer(double x) { return std::floor(x) == x && std::abs(x) <= 64; }

// x^p with an exact repeated-multiplication path for small integer p
double pow_scalar(double x, double p) {
    if (is_small_integer(p)) {
        long long n = static_cast<long long>(p);
        bool inv = n < 0;
        if (inv) n = -n;
        double r = 1.0;
        for (long long i = 0; i < n; ++i) r *= x;
        return inv ? 1.0 / r : r;
    }
    return std::pow(x, p);
}

}  // namespace

NodeId Tape::emit(Tensor value, bool needs_grad, std::function<void(Tape&)> backward_fn,
                  const char* what) {
    ensure_finite(value, what);
    nodes_.push_back(
        Node{std::move(value), needs_grad, needs_grad ? std::move(backward_fn) : nullptr, nullptr});
    return nodes_.size() - 1;
}

NodeId Tape::constant(Tensor v) {
    ensure_finite(v, "constant");
    nodes_.push_back(Node{std::move(v), false, nullptr, nullptr});
    return nodes_.size() - 1;
}

NodeId Tape::watch(Parameter& p) {
    ensure_finite(p.value, "parameter " + p.id);
    if (!p.grad.same_shape(p.value)) throw ValidationError("parameter grad/value shape mismatch");
    nodes_.push_back(Node{p.value, true, nullptr, &p});
    return nodes_.size() - 1;
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor &av = value(a), &bv = value(b);
    if (av.cols != bv.rows)
        throw ValidationError("matmul: inner dims " + std::to_string(av.cols) + " vs " +
                              std::to_string(bv.rows));
    NodeId out = emit(matmul_raw(av, bv), needs(a) || needs(b), nullptr, "matmul");
    nodes_[out].backward_fn = [out, a, b](Tape& t) {
        const Tensor& g = t.grad(out);
        if (t.needs(a)) matmul_acc(g, transpose_raw(t.value(b)), t.grad(a));
        if (t.needs(b)) matmul_acc(transpose_raw(t.value(a)), g, t.grad(b));
    };
    return out;
}

NodeId Tape::transpose(NodeId a) {
    NodeId out = emit(transpose_raw(value(a)), needs(a), nullptr, "transpose");
    nodes_[out].backward_fn = [out, a](Tape& t) {
        const Tensor& g = t.grad(out);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < g.rows; ++i)
            for (std::size_t j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
    };
    return out;
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor &av = value(a), &bv = value(b);
    bool broadcast = bv.rows == 1 && bv.cols == av.cols && av.rows != 1;
    if (!broadcast) ensure_same_shape(av, bv, "add");
    Tensor out = av;
    if (broadcast) {
        for (std::size_t i = 0; i < out.rows; ++i)
            for (std::size_t j = 0; j < out.cols; ++j) out.at(i, j) += bv.at(0, j);
    } else {
        for (std::size_t k = 0; k < out.size(); ++k) out.data[k] += bv.data[k];
    }
    NodeId res = emit(std::move(out), needs(a) || needs(b), nullptr, "add");
    nodes_[res].backward_fn = [res, a, b, broadcast](Tape& t) {
        const Tensor& g = t.grad(res);
        if (t.needs(a)) {
            Tensor& ga = t.grad(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
        }
        if (t.needs(b)) {
            Tensor& gb = t.grad(b);
            if (broadcast) {
                for (std::size_t i = 0; i < g.rows; ++i)
                    for (std::size_t j = 0; j < g.cols; ++j) gb.at(0, j) += g.at(i, j);
            } else {
                for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] += g.data[k];
            }
        }
    };
    return res;
}

NodeId Tape::sub(NodeId a, NodeId b) { return add(a, scalar_mul(b, -1.0)); }

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor &av = value(a), &bv = value(b);
    ensure_same_shape(av, bv, "mul");
    Tensor out = av;
    for (std::size_t k = 0; k < out.size(); ++k) out.data[k] *= bv.data[k];
    NodeId res = emit(std::move(out), needs(a) || needs(b), nullptr, "mul");
    nodes_[res].backward_fn = [res, a, b](Tape& t) {
        const Tensor& g = t.grad(res);
        if (t.needs(a)) {
            Tensor& ga = t.grad(a);
            const Tensor& bv2 = t.value(b);
            for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * bv2.data[k];
        }
        if (t.needs(b)) {
            Tensor& gb = t.grad(b);
            const Tensor& av2 = t.value(a);
            for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] += g.data[k] * av2.data[k];
        }
    };
    return res;
}

NodeId Tape::scalar_mul(NodeId a, double s) {
    Tensor out = value(a);
    for (double& v : out.data) v *= s;
    NodeId res = emit(std::move(out), needs(a), nullptr, "scalar_mul");
    nodes_[res].backward_fn = [res, a, s](Tape& t) {
        const Tensor& g = t.grad(res);
        Tensor& ga = t.grad(a);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += s * g.data[k];
    };
    return res;
}

NodeId Tape::mul_scalar_node(NodeId a, NodeId s) {
    if (!value(s).is_scalar()) throw ValidationError("mul_scalar_node: s must be 1x1");
    double sv = value(s).data[0];
    Tensor out = value(a);
    for (double& v : out.data) v *= sv;
    NodeId res = emit(std::move(out), needs(a) || needs(s), nullptr, "mul_scalar_node");
    nodes_[res].backward_fn = [res, a, s, sv](Tape& t) {
        const Tensor& g = t.grad(res);
        if (t.needs(a)) {
            Tensor& ga = t.grad(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += sv * g.data[k];
        }
        if (t.needs(s)) {
            const Tensor& av = t.value(a);
            double acc = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) acc += g.data[k] * av.data[k];
            t.grad(s).data[0] += acc;
        }
    };
    return res;
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    const Tensor &av = value(a), &bv = value(b);
    if (av.rows != bv.rows) throw ValidationError("concat_cols: row counts differ");
    Tensor out(av.rows, av.cols + bv.cols);
    for (std::size_t i = 0; i < av.rows; ++i) {
        std::copy(av.row(i).begin(), av.row(i).end(), out.row(i).begin());
        std::copy(bv.row(i).begin(), bv.row(i).end(), out.row(i).begin() + av.cols);
    }
    std::size_t acols = av.cols;
    NodeId res = emit(std::move(out), needs(a) || needs(b), nullptr, "concat_cols");
    nodes_[res].backward_fn = [res, a, b, acols](Tape& t) {
        const Tensor& g = t.grad(res);
        if (t.needs(a)) {
            Tensor& ga = t.grad(a);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = 0; j < acols; ++j) ga.at(i, j) += g.at(i, j);
        }
        if (t.needs(b)) {
            Tensor& gb = t.grad(b);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = acols; j < g.cols; ++j) gb.at(i, j - acols) += g.at(i, j);
        }
    };
    return res;
}

NodeId Tape::gather_rows(NodeId a, std::vector<std::size_t> indices) {
    const Tensor& av = value(a);
    for (std::size_t idx : indices)
        if (idx >= av.rows) throw ValidationError("gather_rows: index out of range");
    Tensor out(indices.size(), av.cols);
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy(av.row(indices[i]).begin(), av.row(indices[i]).end(), out.row(i).begin());
    NodeId res = emit(std::move(out), needs(a), nullptr, "gather_rows");
    nodes_[res].backward_fn = [res, a, idx = std::move(indices)](Tape& t) {
        const Tensor& g = t.grad(res);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < g.cols; ++j) ga.at(idx[i], j) += g.at(i, j);
    };
    return res;
}

NodeId Tape::scatter_rows(NodeId a, std::vector<std::size_t> indices, std::size_t out_rows) {
    const Tensor& av = value(a);
    if (indices.size() != av.rows) throw ValidationError("scatter_rows: index count != rows");
    std::unordered_set<std::size_t> seen;
    for (std::size_t idx : indices) {
        if (idx >= out_rows) throw ValidationError("scatter_rows: index out of range");
        if (!seen.insert(idx).second) throw ValidationError("scatter_rows: duplicate index");
    }
    Tensor out(out_rows, av.cols);
    for (std::size_t i = 0; i < indices.size(); ++i)
        std::copy(av.row(i).begin(), av.row(i).end(), out.row(indices[i]).begin());
    NodeId res = emit(std::move(out), needs(a), nullptr, "scatter_rows");
    nodes_[res].backward_fn = [res, a, idx = std::move(indices)](Tape& t) {
        const Tensor& g = t.grad(res);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = 0; j < g.cols; ++j) ga.at(i, j) += g.at(idx[i], j);
    };
    return res;
}

NodeId Tape::sum_all(NodeId a) {
    const Tensor& av = value(a);
    double s = 0.0;
    for (double v : av.data) s += v;
    Tensor out(1, 1);
    out.data[0] = s;
    NodeId res = emit(std::move(out), needs(a), nullptr, "sum_all");
    nodes_[res].backward_fn = [res, a](Tape& t) {
        double g = t.grad(res).data[0];
        Tensor& ga = t.grad(a);
        for (double& v : ga.data) v += g;
    };
    return res;
}

NodeId Tape::mean_all(NodeId a) {
    const Tensor& av = value(a);
    if (av.size() == 0) throw ValidationError("mean_all: empty tensor");
    double s = 0.0;
    for (double v : av.data) s += v;
    Tensor out(1, 1);
    out.data[0] = s / static_cast<double>(av.size());
    double inv_n = 1.0 / static_cast<double>(av.size());
    NodeId res = emit(std::move(out), needs(a), nullptr, "mean_all");
    nodes_[res].backward_fn = [res, a, inv_n](Tape& t) {
        double g = t.grad(res).data[0] * inv_n;
        Tensor& ga = t.grad(a);
        for (double& v : ga.data) v += g;
    };
    return res;
}

NodeId Tape::row_sum(NodeId a) {
    const Tensor& av = value(a);
    Tensor out(av.rows, 1);
    for (std::size_t i = 0; i < av.rows; ++i) {
        double s = 0.0;
        for (double v : av.row(i)) s += v;
        out.at(i, 0) = s;
    }
    NodeId res = emit(std::move(out), needs(a), nullptr, "row_sum");
    nodes_[res].backward_fn = [res, a](Tape& t) {
        const Tensor& g = t.grad(res);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < ga.rows; ++i) {
            double gi = g.at(i, 0);
            for (std::size_t j = 0; j < ga.cols; ++j) ga.at(i, j) += gi;
        }
    };
    return res;
}

NodeId Tape::power(NodeId a, double exponent) {
    const Tensor& av = value(a);
    if (!is_small_integer(exponent))
        for (double v : av.data)
            if (v < 0.0)
                throw NumericDomainError("power: negative base with non-integer exponent");
    if (exponent == 1.0) {
        // exact identity, keeps gamma=1 losses bit-equal to the unscaled form
        NodeId res = emit(av, needs(a), nullptr, "power");
        nodes_[res].backward_fn = [res, a](Tape& t) {
            const Tensor& g = t.grad(res);
            Tensor& ga = t.grad(a);
            for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
        };
        return res;
    }
    Tensor out = av;
    for (double& v : out.data) v = pow_scalar(v, exponent);
    NodeId res = emit(std::move(out), needs(a), nullptr, "power");
    nodes_[res].backward_fn = [res, a, exponent](Tape& t) {
        const Tensor& g = t.grad(res);
        const Tensor& av2 = t.value(a);
        Tensor& ga = t.grad(a);
        for (std::size_t k = 0; k < g.size(); ++k)
            ga.data[k] += g.data[k] * exponent * pow_scalar(av2.data[k], exponent - 1.0);
    };
    return res;
}

NodeId Tape::leaky_relu(NodeId a, double negative_slope) {
    Tensor out = value(a);
    for (double& v : out.data)
        if (v < 0.0) v *= negative_slope;
    NodeId res = emit(std::move(out), needs(a), nullptr, "leaky_relu");
    nodes_[res].backward_fn = [res, a, negative_slope](Tape& t) {
        const Tensor& g = t.grad(res);
        const Tensor& av = t.value(a);
        Tensor& ga = t.grad(a);
        for (std::size_t k = 0; k < g.size(); ++k)
            ga.data[k] += g.data[k] * (av.data[k] >= 0.0 ? 1.0 : negative_slope);
    };
    return res;
}

NodeId Tape::prelu(NodeId a, NodeId slope) {
    const Tensor &av = value(a), &sv = value(slope);
    bool shared = sv.rows == 1 && sv.cols == 1;
    if (!shared && (sv.rows != 1 || sv.cols != av.cols))
        throw ValidationError("prelu: slope must be 1x1 or 1 x cols");
    Tensor out = av;
    for (std::size_t i = 0; i < out.rows; ++i)
        for (std::size_t j = 0; j < out.cols; ++j)
            if (out.at(i, j) < 0.0) out.at(i, j) *= shared ? sv.data[0] : sv.at(0, j);
    NodeId res = emit(std::move(out), needs(a) || needs(slope), nullptr, "prelu");
    nodes_[res].backward_fn = [res, a, slope, shared](Tape& t) {
        const Tensor& g = t.grad(res);
        const Tensor& av2 = t.value(a);
        const Tensor& sv2 = t.value(slope);
        if (t.needs(a)) {
            Tensor& ga = t.grad(a);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = 0; j < g.cols; ++j) {
                    double s = shared ? sv2.data[0] : sv2.at(0, j);
                    ga.at(i, j) += g.at(i, j) * (av2.at(i, j) >= 0.0 ? 1.0 : s);
                }
        }
        if (t.needs(slope)) {
            Tensor& gs = t.grad(slope);
            for (std::size_t i = 0; i < g.rows; ++i)
                for (std::size_t j = 0; j < g.cols; ++j)
                    if (av2.at(i, j) < 0.0)
                        gs.at(0, shared ? 0 : j) += g.at(i, j) * av2.at(i, j);
        }
    };
    return res;
}

NodeId Tape::exp(NodeId a) {
    Tensor out = value(a);
    for (double& v : out.data) v = std::exp(v);
    NodeId res = emit(std::move(out), needs(a), nullptr, "exp");
    nodes_[res].backward_fn = [res, a](Tape& t) {
        const Tensor& g = t.grad(res);
        const Tensor& ov = t.value(res);
        Tensor& ga = t.grad(a);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * ov.data[k];
    };
    return res;
}

NodeId Tape::log(NodeId a) {
    const Tensor& av = value(a);
    for (double v : av.data)
        if (v <= 0.0) throw NumericDomainError("log: non-positive input");
    Tensor out = av;
    for (double& v : out.data) v = std::log(v);
    NodeId res = emit(std::move(out), needs(a), nullptr, "log");
    nodes_[res].backward_fn = [res, a](Tape& t) {
        const Tensor& g = t.grad(res);
        const Tensor& av2 = t.value(a);
        Tensor& ga = t.grad(a);
        for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] / av2.data[k];
    };
    return res;
}

NodeId Tape::l2_norm_rows(NodeId a, double eps_floor) {
    if (eps_floor <= 0.0) throw ValidationError("l2_norm_rows: eps floor must be positive");
    const Tensor& av = value(a);
    Tensor out(av.rows, 1);
    for (std::size_t i = 0; i < av.rows; ++i) {
        double sq = 0.0;
        for (double v : av.row(i)) sq += v * v;
        out.at(i, 0) = std::max(std::sqrt(sq), eps_floor);
    }
    NodeId res = emit(std::move(out), needs(a), nullptr, "l2_norm_rows");
    nodes_[res].backward_fn = [res, a, eps_floor](Tape& t) {
        const Tensor& g = t.grad(res);
        const Tensor& av2 = t.value(a);
        const Tensor& norms = t.value(res);
        Tensor& ga = t.grad(a);
        for (std::size_t i = 0; i < av2.rows; ++i) {
            double n = norms.at(i, 0);
            if (n <= eps_floor) continue;  // clamped region, zero slope
            double gi = g.at(i, 0) / n;
            for (std::size_t j = 0; j < av2.cols; ++j) ga.at(i, j) += gi * av2.at(i, j);
        }
    };
    return res;
}

NodeId Tape::spmm(const CsrAdjacency& adj, NodeId h) {
    const Tensor& hv = value(h);
    if (adj.n != hv.rows)
        throw ValidationError("spmm: adjacency has " + std::to_string(adj.n) + " rows, h has " +
                              std::to_string(hv.rows));
    Tensor out(adj.n, hv.cols);
    for (std::size_t i = 0; i < adj.n; ++i) {
        double* orow = out.data.data() + i * out.cols;
        for (std::size_t k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k) {
            double w = adj.edge_values[k];
            const double* hrow = hv.data.data() + adj.col_indices[k] * hv.cols;
            for (std::size_t j = 0; j < hv.cols; ++j) orow[j] += w * hrow[j];
        }
    }
    const CsrAdjacency* ap = &adj;
    NodeId res = emit(std::move(out), needs(h), nullptr, "spmm");
    nodes_[res].backward_fn = [res, h, ap](Tape& t) {
        const Tensor& g = t.grad(res);
        Tensor& gh = t.grad(h);
        for (std::size_t i = 0; i < ap->n; ++i) {
            const double* grow = g.data.data() + i * g.cols;
            for (std::size_t k = ap->row_offsets[i]; k < ap->row_offsets[i + 1]; ++k) {
                double w = ap->edge_values[k];
                double* ghrow = gh.data.data() + ap->col_indices[k] * gh.cols;
                for (std::size_t j = 0; j < g.cols; ++j) ghrow[j] += w * grow[j];
            }
        }
    };
    return res;
}

NodeId Tape::arc_scores(NodeId s_row, NodeId s_col, const CsrAdjacency& adj) {
    const Tensor &rv = value(s_row), &cv = value(s_col);
    if (rv.rows != adj.n || rv.cols != 1 || cv.rows != adj.n || cv.cols != 1)
        throw ValidationError("arc_scores: inputs must be n x 1");
    Tensor out(adj.nnz(), 1);
    for (std::size_t i = 0; i < adj.n; ++i)
        for (std::size_t k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k)
            out.at(k, 0) = rv.at(i, 0) + cv.at(adj.col_indices[k], 0);
    const CsrAdjacency* ap = &adj;
    NodeId res = emit(std::move(out), needs(s_row) || needs(s_col), nullptr, "arc_scores");
    nodes_[res].backward_fn = [res, s_row, s_col, ap](Tape& t) {
        const Tensor& g = t.grad(res);
        for (std::size_t i = 0; i < ap->n; ++i)
            for (std::size_t k = ap->row_offsets[i]; k < ap->row_offsets[i + 1]; ++k) {
                if (t.needs(s_row)) t.grad(s_row).at(i, 0) += g.at(k, 0);
                if (t.needs(s_col)) t.grad(s_col).at(ap->col_indices[k], 0) += g.at(k, 0);
            }
    };
    return res;
}

NodeId Tape::segment_softmax(NodeId arc_logits, const CsrAdjacency& adj) {
    const Tensor& lv = value(arc_logits);
    if (lv.rows != adj.nnz() || lv.cols != 1)
        throw ValidationError("segment_softmax: logits must be nnz x 1");
    Tensor out(lv.rows, 1);
    for (std::size_t i = 0; i < adj.n; ++i) {
        std::size_t lo = adj.row_offsets[i], hi = adj.row_offsets[i + 1];
        if (lo == hi) continue;
        double mx = lv.at(lo, 0);
        for (std::size_t k = lo + 1; k < hi; ++k) mx = std::max(mx, lv.at(k, 0));
        double z = 0.0;
        for (std::size_t k = lo; k < hi; ++k) {
            out.at(k, 0) = std::exp(lv.at(k, 0) - mx);
            z += out.at(k, 0);
        }
        for (std::size_t k = lo; k < hi; ++k) out.at(k, 0) /= z;
    }
    const CsrAdjacency* ap = &adj;
    NodeId res = emit(std::move(out), needs(arc_logits), nullptr, "segment_softmax");
    nodes_[res].backward_fn = [res, arc_logits, ap](Tape& t) {
        const Tensor& g = t.grad(res);
        const Tensor& y = t.value(res);
        Tensor& gl = t.grad(arc_logits);
        for (std::size_t i = 0; i < ap->n; ++i) {
            std::size_t lo = ap->row_offsets[i], hi = ap->row_offsets[i + 1];
            double dot = 0.0;
            for (std::size_t k = lo; k < hi; ++k) dot += y.at(k, 0) * g.at(k, 0);
            for (std::size_t k = lo; k < hi; ++k)
                gl.at(k, 0) += y.at(k, 0) * (g.at(k, 0) - dot);
        }
    };
    return res;
}

NodeId Tape::spmm_arc_weighted(NodeId arc_weights, const CsrAdjacency& adj, NodeId h) {
    const Tensor &wv = value(arc_weights), &hv = value(h);
    if (wv.rows != adj.nnz() || wv.cols != 1)
        throw ValidationError("spmm_arc_weighted: weights must be nnz x 1");
    if (hv.rows != adj.n) throw ValidationError("spmm_arc_weighted: h row count != n");
    Tensor out(adj.n, hv.cols);
    for (std::size_t i = 0; i < adj.n; ++i) {
        double* orow = out.data.data() + i * out.cols;
        for (std::size_t k = adj.row_offsets[i]; k < adj.row_offsets[i + 1]; ++k) {
            double w = wv.at(k, 0);
            const double* hrow = hv.data.data() + adj.col_indices[k] * hv.cols;
            for (std::size_t j = 0; j < hv.cols; ++j) orow[j] += w * hrow[j];
        }
    }
    const CsrAdjacency* ap = &adj;
    NodeId res = emit(std::move(out), needs(arc_weights) || needs(h), nullptr, "spmm_arc_weighted");
    nodes_[res].backward_fn = [res, arc_weights, h, ap](Tape& t) {
        const Tensor& g = t.grad(res);
        const Tensor& wv2 = t.value(arc_weights);
        const Tensor& hv2 = t.value(h);
        for (std::size_t i = 0; i < ap->n; ++i) {
            const double* grow = g.data.data() + i * g.cols;
            for (std::size_t k = ap->row_offsets[i]; k < ap->row_offsets[i + 1]; ++k) {
                std::size_t c = ap->col_indices[k];
                if (t.needs(arc_weights)) {
                    const double* hrow = hv2.data.data() + c * hv2.cols;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < g.cols; ++j) acc += grow[j] * hrow[j];
                    t.grad(arc_weights).at(k, 0) += acc;
                }
                if (t.needs(h)) {
                    double w = wv2.at(k, 0);
                    double* ghrow = t.grad(h).data.data() + c * hv2.cols;
                    for (std::size_t j = 0; j < g.cols; ++j) ghrow[j] += w * grow[j];
                }
            }
        }
    };
    return res;
}

NodeId Tape::overwrite_rows_with_token(NodeId h, NodeId token, std::vector<std::size_t> rows) {
    const Tensor &hv = value(h), &tv = value(token);
    if (tv.rows != 1 || tv.cols != hv.cols)
        throw ValidationError("overwrite_rows_with_token: token must be 1 x cols");
    for (std::size_t r : rows)
        if (r >= hv.rows) throw ValidationError("overwrite_rows_with_token: row out of range");
    Tensor out = hv;
    for (std::size_t r : rows) std::copy(tv.data.begin(), tv.data.end(), out.row(r).begin());
    NodeId res = emit(std::move(out), needs(h) || needs(token), nullptr, "overwrite_rows");
    nodes_[res].backward_fn = [res, h, token, rws = std::move(rows)](Tape& t) {
        const Tensor& g = t.grad(res);
        if (t.needs(h)) {
            Tensor& gh = t.grad(h);
            std::vector<bool> overwritten(g.rows, false);
            for (std::size_t r : rws) overwritten[r] = true;
            for (std::size_t i = 0; i < g.rows; ++i) {
                if (overwritten[i]) continue;
                for (std::size_t j = 0; j < g.cols; ++j) gh.at(i, j) += g.at(i, j);
            }
        }
        if (t.needs(token)) {
            Tensor& gt = t.grad(token);
            for (std::size_t r : rws)
                for (std::size_t j = 0; j < g.cols; ++j) gt.at(0, j) += g.at(r, j);
        }
    };
    return res;
}

NodeId Tape::softmax_cross_entropy(NodeId logits, std::vector<int> labels) {
    const Tensor& lv = value(logits);
    if (labels.size() != lv.rows)
        throw ValidationError("softmax_cross_entropy: label count != logits rows");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= lv.cols)
            throw ValidationError("softmax_cross_entropy: label out of range");
    // cache the softmax for the backward pass
    Tensor probs(lv.rows, lv.cols);
    double loss = 0.0;
    for (std::size_t i = 0; i < lv.rows; ++i) {
        double mx = lv.at(i, 0);
        for (std::size_t j = 1; j < lv.cols; ++j) mx = std::max(mx, lv.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < lv.cols; ++j) {
            probs.at(i, j) = std::exp(lv.at(i, j) - mx);
            z += probs.at(i, j);
        }
        for (std::size_t j = 0; j < lv.cols; ++j) probs.at(i, j) /= z;
        loss -= std::log(probs.at(i, labels[i]));
    }
    Tensor out(1, 1);
    out.data[0] = loss / static_cast<double>(lv.rows);
    NodeId probs_node = constant(std::move(probs));
    NodeId res = emit(std::move(out), needs(logits), nullptr, "softmax_cross_entropy");
    nodes_[res].backward_fn = [res, logits, probs_node, ys = std::move(labels)](Tape& t) {
        double g = t.grad(res).data[0] / static_cast<double>(ys.size());
        const Tensor& p = t.value(probs_node);
        Tensor& gl = t.grad(logits);
        for (std::size_t i = 0; i < p.rows; ++i)
            for (std::size_t j = 0; j < p.cols; ++j)
                gl.at(i, j) += g * (p.at(i, j) - (static_cast<std::size_t>(ys[i]) == j ? 1.0 : 0.0));
    };
    return res;
}

void Tape::backward(NodeId loss) {
    if (loss >= nodes_.size()) throw ValidationError("backward: unknown node");
    if (!value(loss).is_scalar()) throw ValidationError("backward: loss must be a 1x1 scalar");

    grads_.clear();
    grads_.reserve(nodes_.size());
    for (const Node& n : nodes_) grads_.emplace_back(n.value.rows, n.value.cols);
    grads_[loss].data[0] = 1.0;

    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.needs_grad && n.backward_fn) n.backward_fn(*this);
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!nodes_[i].param) continue;
        Tensor& pg = nodes_[i].param->grad;
        for (std::size_t k = 0; k < pg.size(); ++k) pg.data[k] += grads_[i].data[k];
    }
    grads_.clear();
}

}  // namespace graphmae

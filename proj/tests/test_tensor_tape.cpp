// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "graphmae/csr.hpp"
#include "graphmae/errors.hpp"
#include "graphmae/gradcheck.hpp"
#include "graphmae/rng.hpp"
#include "graphmae/tape.hpp"
#include "helpers/oracles.hpp"

using namespace graphmae;

TEST_CASE("matmul by identity is the identity") {
    Tape t;
    Rng rng(1);
    Tensor m = oracle::random_tensor(3, 7, rng);
    NodeId out = t.matmul(t.constant(Tensor::identity(3)), t.constant(m));
    CHECK(t.value(out).data == m.data);
}

TEST_CASE("matmul shape mismatch is a validation error") {
    Tape t;
    NodeId a = t.constant(Tensor(2, 3));
    NodeId b = t.constant(Tensor(2, 3));
    CHECK_THROWS_AS(t.matmul(a, b), ValidationError);
}

TEST_CASE("matmul agrees with the dense oracle") {
    Rng rng(2);
    Tensor a = oracle::random_tensor(6, 4, rng);
    Tensor b = oracle::random_tensor(4, 5, rng);
    Tape t;
    NodeId out = t.matmul(t.constant(a), t.constant(b));
    CHECK(oracle::max_abs_diff(t.value(out), oracle::dense_matmul(a, b)) < 1e-12);
}

TEST_CASE("prelu with slope one is the identity") {
    Rng rng(3);
    Tensor x = oracle::random_tensor(4, 3, rng);
    Tensor slope(1, 3);
    slope.fill(1.0);
    Tape t;
    NodeId out = t.prelu(t.constant(x), t.constant(slope));
    CHECK(t.value(out).data == x.data);
}

TEST_CASE("domain violations raise numeric-domain errors") {
    Tape t;
    Tensor neg = Tensor::from_rows({{-0.5, 1.0}});
    CHECK_THROWS_AS(t.log(t.constant(neg)), NumericDomainError);
    CHECK_THROWS_AS(t.power(t.constant(neg), 2.5), NumericDomainError);
    // integer exponents accept negative bases
    CHECK_NOTHROW(t.power(t.constant(neg), 3.0));
}

TEST_CASE("non-finite op output trips the finite check") {
    Tape t;
    Tensor big = Tensor::from_rows({{1000.0}});
    CHECK_THROWS_AS(t.exp(t.constant(big)), NumericDomainError);
}

TEST_CASE("backward of a constant loss leaves gradients at zero") {
    Parameter w("w", Tensor::from_rows({{1.0, 2.0}}));
    Tape t;
    t.watch(w);
    NodeId loss = t.sum_all(t.constant(Tensor::from_rows({{5.0}})));
    t.backward(loss);
    CHECK(w.grad.at(0, 0) == 0.0);
    CHECK(w.grad.at(0, 1) == 0.0);
}

TEST_CASE("backward of a linear form recovers the coefficients exactly") {
    Parameter w("w", Tensor::from_rows({{1.0, -2.0, 0.5}}));
    Tensor c = Tensor::from_rows({{3.0, 7.0, -4.0}});
    Tape t;
    NodeId loss = t.sum_all(t.mul(t.watch(w), t.constant(c)));
    t.backward(loss);
    CHECK(w.grad.data == c.data);
}

TEST_CASE("backward requires a scalar loss") {
    Parameter w("w", Tensor(2, 2));
    Tape t;
    NodeId node = t.watch(w);
    CHECK_THROWS_AS(t.backward(node), ValidationError);
}

TEST_CASE("backward accumulates across calls") {
    Parameter w("w", Tensor::from_rows({{2.0}}));
    Tape t;
    NodeId loss = t.scalar_mul(t.watch(w), 3.0);
    t.backward(loss);
    CHECK(w.grad.at(0, 0) == 3.0);
    t.backward(loss);
    CHECK(w.grad.at(0, 0) == 6.0);
}

TEST_CASE("tape replay is bit-deterministic") {
    Rng rng(4);
    Tensor x = oracle::random_tensor(5, 4, rng);
    Tensor w0 = oracle::random_tensor(4, 3, rng);
    auto run = [&]() {
        Parameter w("w", w0);
        Tape t;
        NodeId out = t.exp(t.scalar_mul(t.matmul(t.constant(x), t.watch(w)), 0.1));
        t.backward(t.mean_all(out));
        return w.grad.data;
    };
    CHECK(run() == run());
}

TEST_CASE("spmm with the identity adjacency returns its input") {
    CsrAdjacency eye = add_self_loops(csr_from_undirected_edges(4, {}));
    Rng rng(5);
    Tensor h = oracle::random_tensor(4, 3, rng);
    Tape t;
    NodeId out = t.spmm(eye, t.constant(h));
    CHECK(t.value(out).data == h.data);
}

TEST_CASE("spmm leaves isolated nodes at zero") {
    // node 2 is isolated
    CsrAdjacency adj = csr_from_undirected_edges(3, {{0, 1}});
    Tensor h = Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
    Tape t;
    NodeId out = t.spmm(adj, t.constant(h));
    CHECK(t.value(out).at(2, 0) == 0.0);
    CHECK(t.value(out).at(2, 1) == 0.0);
    CHECK(t.value(out).at(0, 0) == 3.0);  // neighbor row
}

TEST_CASE("spmm matches the dense product on a random graph") {
    Rng rng(6);
    CsrAdjacency adj = oracle::random_graph(20, 0.3, rng);
    Tensor h = oracle::random_tensor(20, 5, rng);
    Tape t;
    NodeId out = t.spmm(adj, t.constant(h));
    Tensor expected = oracle::dense_matmul(oracle::dense_from_csr(adj), h);
    CHECK(oracle::max_abs_diff(t.value(out), expected) < 1e-10);
}

TEST_CASE("segment softmax basics") {
    // single node with a self-loop: one-arc segment -> probability 1
    CsrAdjacency single = add_self_loops(csr_from_undirected_edges(1, {}));
    Tape t;
    NodeId out = t.segment_softmax(t.constant(Tensor::from_rows({{2.7}})), single);
    CHECK(t.value(out).at(0, 0) == 1.0);

    // two equal logits split evenly
    CsrAdjacency pair = add_self_loops(csr_from_undirected_edges(2, {{0, 1}}));
    Tensor logits(pair.nnz(), 1);
    logits.fill(0.42);
    Tape t2;
    NodeId out2 = t2.segment_softmax(t2.constant(logits), pair);
    for (std::size_t k = 0; k < pair.nnz(); ++k)
        CHECK(t2.value(out2).at(k, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("segment softmax matches a dense softmax and normalizes per segment") {
    Rng rng(7);
    // a 5-arc segment: star around node 0 plus self-loops
    CsrAdjacency star = add_self_loops(
        csr_from_undirected_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}));
    Tensor logits(star.nnz(), 1);
    for (double& v : logits.data) v = 2.0 * rng.uniform() - 1.0;
    Tape t;
    NodeId out = t.segment_softmax(t.constant(logits), star);

    // node 0's segment, recomputed directly
    std::size_t lo = star.row_offsets[0], hi = star.row_offsets[1];
    CHECK(hi - lo == 5);
    double mx = -1e300, z = 0.0;
    for (std::size_t k = lo; k < hi; ++k) mx = std::max(mx, logits.at(k, 0));
    for (std::size_t k = lo; k < hi; ++k) z += std::exp(logits.at(k, 0) - mx);
    for (std::size_t k = lo; k < hi; ++k)
        CHECK(std::abs(t.value(out).at(k, 0) - std::exp(logits.at(k, 0) - mx) / z) < 1e-12);

    // positivity and per-segment normalization across the whole graph
    for (std::size_t i = 0; i < star.n; ++i) {
        double s = 0.0;
        for (std::size_t k = star.row_offsets[i]; k < star.row_offsets[i + 1]; ++k) {
            CHECK(t.value(out).at(k, 0) > 0.0);
            s += t.value(out).at(k, 0);
        }
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("scatter_rows rejects duplicate targets") {
    Tape t;
    NodeId a = t.constant(Tensor(2, 2));
    CHECK_THROWS_AS(t.scatter_rows(a, {1, 1}, 4), ValidationError);
}

TEST_CASE("gather out of range is a validation error") {
    Tape t;
    NodeId a = t.constant(Tensor(2, 2));
    CHECK_THROWS_AS(t.gather_rows(a, {2}), ValidationError);
}

TEST_CASE("every registered op, layer, and loss passes finite differences") {
    auto results = run_gradcheck();
    for (const auto& r : results) {
        INFO(r.name << " max_rel_err=" << r.max_rel_err);
        CHECK(r.pass());
    }
}

TEST_CASE("a corrupted backward is caught by the checker") {
    auto results = run_gradcheck(/*corrupt_analytic=*/true);
    bool any_failed = false;
    for (const auto& r : results) any_failed |= !r.pass();
    CHECK(any_failed);
}

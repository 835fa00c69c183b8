// SPDX-License-Identifier: Apache-2.0

#include "graphmae/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "graphmae/errors.hpp"

namespace graphmae {

Tensor::Tensor(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols)
        throw ValidationError("tensor data length " + std::to_string(data.size()) +
                              " does not match shape " + std::to_string(rows) + "x" +
                              std::to_string(cols));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows_init) {
    Tensor t(rows_init.size(), rows_init.size() ? rows_init.begin()->size() : 0);
    std::size_t i = 0;
    for (const auto& r : rows_init) {
        if (r.size() != t.cols) throw ValidationError("ragged row in tensor literal");
        std::copy(r.begin(), r.end(), t.data.begin() + i * t.cols);
        ++i;
    }
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

double Tensor::scalar() const {
    if (!is_scalar()) throw ValidationError("tensor is not 1x1");
    return data[0];
}

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

void ensure_finite(const Tensor& t, const std::string& what) {
    if (!t.all_finite()) throw NumericDomainError("non-finite value in " + what);
}

void ensure_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
    if (!a.same_shape(b))
        throw ValidationError(what + ": shape mismatch " + std::to_string(a.rows) + "x" +
                              std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                              std::to_string(b.cols));
}

}  // namespace graphmae

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace graphmae {

// Dense row-major f64 matrix. Vectors are 1xN or Nx1.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Tensor(std::size_t r, std::size_t c, std::vector<double> d);

    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows_init);
    static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c); }
    static Tensor identity(std::size_t n);

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    std::size_t size() const { return rows * cols; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    double scalar() const;

    void fill(double v) { std::fill(data.begin(), data.end(), v); }
    bool all_finite() const;
};

// Throws NumericDomainError naming `what` if t holds a NaN/Inf.
void ensure_finite(const Tensor& t, const std::string& what);

// Throws ValidationError unless shapes match.
void ensure_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

}  // namespace graphmae

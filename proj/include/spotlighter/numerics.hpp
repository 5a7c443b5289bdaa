// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace spot {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Rows are tokens, columns are features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

/// Unit vector in the direction of v. Throws ZeroVector when ||v|| < 1e-12.
Vector l2_normalize(std::span<const double> v);
Matrix normalize_rows(const Matrix& m);

/// Entry (i, j) is the cosine between A.row(i) and B.row(j).
Matrix cosine_matrix(const Matrix& a, const Matrix& b);

/// Max-subtracted softmax of x / temperature.
Vector softmax(std::span<const double> x, double temperature);

/// log(softmax(x / temperature)), computed with log-sum-exp.
Vector log_softmax(std::span<const double> x, double temperature);

/// Kullback-Leibler divergence sum p_i ln(p_i / q_i), with q clamped at 1e-12.
double kl_divergence(std::span<const double> p, std::span<const double> q);

Vector mean_rows(const Matrix& m);
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);
Matrix vstack(const Matrix& top, const Matrix& bottom);
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end);

/// C = A * B
Matrix matmul(const Matrix& a, const Matrix& b);
/// C = A * B^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
/// C += A^T * B
void add_matmul_at(const Matrix& a, const Matrix& b, Matrix& c);

void add_row_broadcast(Matrix& m, std::span<const double> bias);
void add_column_sums(const Matrix& m, std::span<double> out);

bool all_finite(std::span<const double> v);

/// Rounds every entry to the nearest binary32 value.
void round_to_f32(std::span<double> v);

double gelu(double x);
double gelu_derivative(double x);

/// Layer normalization along each row; xhat and inv_std are kept for backward.
struct LayerNormCache {
  Matrix xhat;
  Vector inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

Matrix layer_norm(const Matrix& x, std::span<const double> gamma, std::span<const double> beta,
                  LayerNormCache* cache = nullptr);

/// Returns dL/dx and accumulates dL/dgamma, dL/dbeta.
Matrix layer_norm_backward(const LayerNormCache& cache, const Matrix& dy,
                           std::span<const double> gamma, std::span<double> dgamma,
                           std::span<double> dbeta);

}  // namespace spot

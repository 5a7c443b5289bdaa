// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "spotlighter/error.hpp"

namespace spot {

namespace {

constexpr double kZeroNorm = 1e-12;
constexpr double kKlFloor = 1e-12;
constexpr double kDistributionTol = 1e-6;

void require_same_cols(const Matrix& a, const Matrix& b, const char* what) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::DimMismatch, std::string(what) + ": column counts " +
                                            std::to_string(a.cols()) + " vs " +
                                            std::to_string(b.cols()));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::DimMismatch, "matrix data length does not equal rows*cols");
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw Error(ErrorCode::DimMismatch, "ragged initializer rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimMismatch, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector l2_normalize(std::span<const double> v) {
  if (v.empty()) throw Error(ErrorCode::DimMismatch, "l2_normalize: empty vector");
  const double n = norm(v);
  if (!(n >= kZeroNorm)) throw Error(ErrorCode::ZeroVector, "l2_normalize: norm below 1e-12");
  Vector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

Matrix normalize_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Vector u = l2_normalize(m.row(r));
    std::copy(u.begin(), u.end(), out.row(r).begin());
  }
  return out;
}

Matrix cosine_matrix(const Matrix& a, const Matrix& b) {
  require_same_cols(a, b, "cosine_matrix");
  if (a.cols() == 0) throw Error(ErrorCode::DimMismatch, "cosine_matrix: zero width");
  const Matrix an = normalize_rows(a);
  const Matrix bn = normalize_rows(b);
  return matmul_bt(an, bn);
}

Vector softmax(std::span<const double> x, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::NonPositiveTemperature, "softmax temperature must be positive");
  }
  Vector out(x.size());
  if (x.empty()) return out;
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp((x[i] - mx) / temperature);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Vector log_softmax(std::span<const double> x, double temperature) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorCode::NonPositiveTemperature, "softmax temperature must be positive");
  }
  Vector out(x.size());
  if (x.empty()) return out;
  const double mx = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += std::exp((v - mx) / temperature);
  const double lse = std::log(sum);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mx) / temperature - lse;
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::DimMismatch, "kl_divergence: length mismatch");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw Error(ErrorCode::NotADistribution, "negative entry");
    sp += p[i];
    sq += q[i];
  }
  if (std::abs(sp - 1.0) > kDistributionTol || std::abs(sq - 1.0) > kDistributionTol) {
    throw Error(ErrorCode::NotADistribution, "inputs must each sum to 1");
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    kl += p[i] * std::log(p[i] / std::max(q[i], kKlFloor));
  }
  return kl;
}

Vector mean_rows(const Matrix& m) {
  if (m.rows() == 0) throw Error(ErrorCode::DimMismatch, "mean_rows: no rows");
  Vector out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(m.rows());
  for (double& v : out) v *= inv;
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) throw Error(ErrorCode::DimMismatch, "gather_rows: index range");
    const auto src = m.row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix vstack(const Matrix& top, const Matrix& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  require_same_cols(top, bottom, "vstack");
  std::vector<double> data(top.values().begin(), top.values().end());
  data.insert(data.end(), bottom.values().begin(), bottom.values().end());
  return Matrix(top.rows() + bottom.rows(), top.cols(), std::move(data));
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) throw Error(ErrorCode::DimMismatch, "slice_rows: range");
  std::vector<double> data(m.values().begin() + static_cast<std::ptrdiff_t>(begin * m.cols()),
                           m.values().begin() + static_cast<std::ptrdiff_t>(end * m.cols()));
  return Matrix(end - begin, m.cols(), std::move(data));
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::DimMismatch, "matmul: inner dimensions");
  Matrix c(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.row(i).data();
    const double* arow = a.row(i).data();
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row(p).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  require_same_cols(a, b, "matmul_bt");
  Matrix c(a.rows(), b.rows());
  const std::size_t k = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c(i, j) = s;
    }
  }
  return c;
}

void add_matmul_at(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    throw Error(ErrorCode::DimMismatch, "add_matmul_at: shapes");
  }
  const std::size_t n = b.cols();
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const double* arow = a.row(p).data();
    const double* brow = b.row(p).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void add_row_broadcast(Matrix& m, std::span<const double> bias) {
  if (bias.size() != m.cols()) throw Error(ErrorCode::DimMismatch, "bias width");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += bias[c];
  }
}

void add_column_sums(const Matrix& m, std::span<double> out) {
  if (out.size() != m.cols()) throw Error(ErrorCode::DimMismatch, "column sum width");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c];
  }
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void round_to_f32(std::span<double> v) {
  for (double& x : v) x = static_cast<double>(static_cast<float>(x));
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

// tanh approximation
double gelu(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  return 0.5 * x * (1.0 + std::tanh(u));
}

double gelu_derivative(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

Matrix layer_norm(const Matrix& x, std::span<const double> gamma, std::span<const double> beta,
                  LayerNormCache* cache) {
  const std::size_t n = x.cols();
  if (gamma.size() != n || beta.size() != n) {
    throw Error(ErrorCode::DimMismatch, "layer_norm: parameter width");
  }
  Matrix y(x.rows(), n);
  if (cache) {
    cache->xhat = Matrix(x.rows(), n);
    cache->inv_std.assign(x.rows(), 0.0);
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    double mu = 0.0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    auto out = y.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      const double xh = (row[c] - mu) * inv;
      out[c] = gamma[c] * xh + beta[c];
      if (cache) cache->xhat(r, c) = xh;
    }
    if (cache) cache->inv_std[r] = inv;
  }
  return y;
}

Matrix layer_norm_backward(const LayerNormCache& cache, const Matrix& dy,
                           std::span<const double> gamma, std::span<double> dgamma,
                           std::span<double> dbeta) {
  const std::size_t n = dy.cols();
  Matrix dx(dy.rows(), n);
  Vector dxhat(n);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const auto g = dy.row(r);
    const auto xh = cache.xhat.row(r);
    double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      dxhat[c] = g[c] * gamma[c];
      sum_dxhat += dxhat[c];
      sum_dxhat_xhat += dxhat[c] * xh[c];
      dgamma[c] += g[c] * xh[c];
      dbeta[c] += g[c];
    }
    const double inv = cache.inv_std[r];
    const double nn = static_cast<double>(n);
    auto out = dx.row(r);
    for (std::size_t c = 0; c < n; ++c) {
      out[c] = inv / nn * (nn * dxhat[c] - sum_dxhat - xh[c] * sum_dxhat_xhat);
    }
  }
  return dx;
}

}  // namespace spot

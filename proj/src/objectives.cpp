// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/objectives.hpp"

#include <cmath>

#include "spotlighter/error.hpp"

namespace spot {

void LossWeights::validate() const {
  if (!(lambda1 >= 0.0 && lambda2 >= 0.0 && lambda3 >= 0.0)) {
    throw Error(ErrorCode::Config, "loss weights must be non-negative");
  }
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "tau must be positive");
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  cls += o.cls;
  cls_low += o.cls_low;
  cls_high += o.cls_high;
  reg_text += o.reg_text;
  kl_visual += o.kl_visual;
  local += o.local;
  total += o.total;
  return *this;
}

LossBreakdown LossBreakdown::scaled(double s) const {
  return {cls * s, cls_low * s, cls_high * s, reg_text * s, kl_visual * s, local * s, total * s};
}

Vector pool_unit(const Matrix& tokens) {
  if (tokens.rows() == 0) throw Error(ErrorCode::EmptySelection, "nothing to pool");
  return l2_normalize(mean_rows(tokens));
}

Matrix pool_unit_backward(const Matrix& tokens, std::span<const double> dpooled) {
  const Vector mean = mean_rows(tokens);
  const double n = norm(mean);
  const Vector u = l2_normalize(mean);
  const double proj = dot(u, dpooled);
  const double scale = 1.0 / (n * static_cast<double>(tokens.rows()));
  Vector g(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) g[j] = (dpooled[j] - proj * u[j]) * scale;
  Matrix out(tokens.rows(), tokens.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) std::copy(g.begin(), g.end(), out.row(r).begin());
  return out;
}

namespace {

Matrix class_rows(const Matrix& t_rep, std::size_t n_classes, std::size_t c) {
  std::vector<std::size_t> idx;
  for (std::size_t r = c; r < t_rep.rows(); r += n_classes) idx.push_back(r);
  return gather_rows(t_rep, idx);
}

}  // namespace

Vector class_cosines(const Matrix& v_rep, const Matrix& t_rep, std::size_t n_classes) {
  if (n_classes == 0 || t_rep.rows() == 0 || t_rep.rows() % n_classes != 0) {
    throw Error(ErrorCode::DimMismatch, "text rows are not a whole number of class blocks");
  }
  const Vector v = pool_unit(v_rep);
  Vector out(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) out[c] = dot(v, pool_unit(class_rows(t_rep, n_classes, c)));
  return out;
}

double contrastive_cls_loss(const Matrix& v_rep, const Matrix& t_rep, std::size_t n_classes,
                            std::size_t label, double tau, Matrix* dv, Matrix* dt) {
  if (label >= n_classes) throw Error(ErrorCode::LabelOutOfRange, "label exceeds class count");
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveTemperature, "tau must be positive");
  if (n_classes == 0 || t_rep.rows() % n_classes != 0 || t_rep.rows() == 0) {
    throw Error(ErrorCode::DimMismatch, "text rows are not a whole number of class blocks");
  }
  if (v_rep.cols() != t_rep.cols()) throw Error(ErrorCode::DimMismatch, "rep widths differ");

  const Vector v = pool_unit(v_rep);
  std::vector<Matrix> groups(n_classes);
  std::vector<Vector> t(n_classes);
  Vector logits(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    groups[c] = class_rows(t_rep, n_classes, c);
    t[c] = pool_unit(groups[c]);
    logits[c] = dot(v, t[c]);
  }
  const Vector logp = log_softmax(logits, tau);
  const double loss = -logp[label];
  if (!dv && !dt) return loss;

  // dL/dlogit_c = (p_c - [c == label]) / tau
  Vector dlogit(n_classes);
  for (std::size_t c = 0; c < n_classes; ++c) {
    dlogit[c] = (std::exp(logp[c]) - (c == label ? 1.0 : 0.0)) / tau;
  }
  if (dv) {
    Vector dpool(v.size(), 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t j = 0; j < v.size(); ++j) dpool[j] += dlogit[c] * t[c][j];
    }
    *dv = pool_unit_backward(v_rep, dpool);
  }
  if (dt) {
    *dt = Matrix(t_rep.rows(), t_rep.cols());
    Vector dpool(v.size());
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t j = 0; j < v.size(); ++j) dpool[j] = dlogit[c] * v[j];
      const Matrix g = pool_unit_backward(groups[c], dpool);
      for (std::size_t i = 0, r = c; r < t_rep.rows(); ++i, r += n_classes) {
        std::copy(g.row(i).begin(), g.row(i).end(), dt->row(r).begin());
      }
    }
  }
  return loss;
}

double text_reg_loss(const Matrix& t_ori, const Matrix& t_rep, Matrix* drep) {
  if (t_ori.rows() != t_rep.rows() || t_ori.cols() != t_rep.cols()) {
    throw Error(ErrorCode::DimMismatch, "text regularization shapes differ");
  }
  if (t_rep.empty()) return 0.0;
  const auto a = t_ori.values();
  const auto b = t_rep.values();
  const double inv = 1.0 / static_cast<double>(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(b[i] - a[i]);
  if (drep) {
    *drep = Matrix(t_rep.rows(), t_rep.cols());
    auto g = drep->values();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double diff = b[i] - a[i];
      g[i] = diff > 0.0 ? inv : (diff < 0.0 ? -inv : 0.0);
    }
  }
  return sum * inv;
}

double visual_kl_loss(const Matrix& v_rep, const Matrix& v_ori, Matrix* drep) {
  if (v_rep.cols() != v_ori.cols()) throw Error(ErrorCode::DimMismatch, "visual widths differ");
  const Vector x = pool_unit(v_rep);
  const Vector y = pool_unit(v_ori);
  const Vector lp = log_softmax(x, 1.0);
  const Vector lq = log_softmax(y, 1.0);
  double kl = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) kl += std::exp(lp[j]) * (lp[j] - lq[j]);
  if (drep) {
    Vector dx(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) dx[j] = std::exp(lp[j]) * (lp[j] - lq[j] - kl);
    *drep = pool_unit_backward(v_rep, dx);
  }
  return kl;
}

std::pair<double, double> graded_loss(const Matrix& v_tier1, const Matrix& t_tier1,
                                      const Matrix& v_tier2, const Matrix& t_tier2,
                                      std::size_t n_classes, std::size_t label, double tau) {
  const auto one = [&](const Matrix& v, const Matrix& t) {
    return v.rows() == 0 ? 0.0 : contrastive_cls_loss(v, t, n_classes, label, tau);
  };
  return {one(v_tier1, t_tier1), one(v_tier2, t_tier2)};
}

LossBreakdown total_loss(LossBreakdown parts, const LossWeights& w) {
  for (double x : {parts.cls, parts.cls_low, parts.cls_high, parts.reg_text, parts.kl_visual,
                   parts.local}) {
    if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteLoss, "loss component is not finite");
  }
  parts.total = parts.cls + w.lambda1 * (parts.cls_low + parts.cls_high) +
                w.lambda2 * parts.reg_text + w.lambda3 * (parts.kl_visual + parts.local);
  return parts;
}

}  // namespace spot

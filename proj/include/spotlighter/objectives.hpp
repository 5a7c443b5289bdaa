// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <utility>

#include "spotlighter/numerics.hpp"

namespace spot {

struct LossWeights {
  double lambda1 = 0.02;
  double lambda2 = 20.0;
  double lambda3 = 0.1;
  double tau = 0.01;

  void validate() const;
};

struct LossBreakdown {
  double cls = 0.0;
  double cls_low = 0.0;
  double cls_high = 0.0;
  double reg_text = 0.0;
  double kl_visual = 0.0;
  double local = 0.0;
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown scaled(double s) const;

  bool operator==(const LossBreakdown&) const = default;
};

/// Mean-then-normalize pooling. The backward maps dL/dpooled to dL/dtokens.
Vector pool_unit(const Matrix& tokens);
Matrix pool_unit_backward(const Matrix& tokens, std::span<const double> dpooled);

/// cos(pool(v_rep), pool_c(t_rep)) for every class c.
Vector class_cosines(const Matrix& v_rep, const Matrix& t_rep, std::size_t n_classes);

/// -log softmax_c(cos(pool(v_rep), pool_c(t_rep)) / tau). Rows of t_rep belong
/// to class (row % n_classes), so a tier-stacked text block pools each class
/// over its tiers. Gradients are written when dv / dt are non-null.
double contrastive_cls_loss(const Matrix& v_rep, const Matrix& t_rep, std::size_t n_classes,
                            std::size_t label, double tau, Matrix* dv = nullptr,
                            Matrix* dt = nullptr);

/// Mean absolute difference over every entry.
double text_reg_loss(const Matrix& t_ori, const Matrix& t_rep, Matrix* drep = nullptr);

/// KL(softmax(pool(v_rep)) || softmax(pool(v_ori))) at temperature 1.
double visual_kl_loss(const Matrix& v_rep, const Matrix& v_ori, Matrix* drep = nullptr);

/// Per-tier contrastive losses: (cls_high from tier 1, cls_low from tier 2).
/// An empty tier contributes exactly 0.
std::pair<double, double> graded_loss(const Matrix& v_tier1, const Matrix& t_tier1,
                                      const Matrix& v_tier2, const Matrix& t_tier2,
                                      std::size_t n_classes, std::size_t label, double tau);

/// Fills in total = cls + l1 (low + high) + l2 reg + l3 (kl + local).
/// Throws NonFiniteLoss if any component is NaN or infinite.
LossBreakdown total_loss(LossBreakdown parts, const LossWeights& w);

}  // namespace spot

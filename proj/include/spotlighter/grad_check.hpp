// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace spot {

using ScalarFn = std::function<double(std::span<const double>)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  /// |analytic - numeric| / max(1, |analytic|) for every parameter.
  std::vector<double> rel_errors;
};

/// Compares an analytic gradient against central differences of f at params.
/// eps must lie in [1e-6, 1e-3]. Throws NonFiniteLoss if f returns NaN/Inf at
/// any probe point.
GradCheckResult grad_check(const ScalarFn& f, std::span<const double> params,
                           std::span<const double> analytic, double eps = 1e-6);

}  // namespace spot

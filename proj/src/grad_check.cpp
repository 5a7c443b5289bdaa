// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spotlighter/error.hpp"

namespace spot {

GradCheckResult grad_check(const ScalarFn& f, std::span<const double> params,
                           std::span<const double> analytic, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) {
    throw Error(ErrorCode::InvalidArgument, "grad_check step must lie in [1e-6, 1e-3]");
  }
  if (params.size() != analytic.size()) {
    throw Error(ErrorCode::DimMismatch, "grad_check: gradient length differs from parameters");
  }
  std::vector<double> x(params.begin(), params.end());
  const auto eval = [&](std::size_t i) {
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteLoss, "objective not finite near parameter " +
                                                std::to_string(i));
    }
    return v;
  };
  eval(0);

  GradCheckResult result;
  result.rel_errors.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = eval(i);
    x[i] = saved - eps;
    const double down = eval(i);
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    const double err = std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i]));
    result.rel_errors[i] = err;
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace spot

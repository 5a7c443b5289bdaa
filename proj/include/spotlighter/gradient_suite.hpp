// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spotlighter/config.hpp"

namespace spot {

inline constexpr std::size_t kMaxGradCheckWidth = 16;

struct GradientSuiteOptions {
  std::size_t seeds = 100;
  std::uint64_t first_seed = 1;
  std::size_t n_tok = 8;
  std::size_t n_classes = 3;
  double param_std = 0.3;
  double eps = 1e-6;
  bool corrupt_gradient = false;  // test hook: perturbs one analytic entry
};

struct TensorGradError {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradientSuiteReport {
  double max_rel_error = 0.0;
  std::uint64_t worst_seed = 0;
  std::string worst_tensor;
  std::vector<TensorGradError> per_tensor;  // worst over all seeds
  std::size_t seeds = 0;
  std::size_t parameters = 0;  // per instance
};

/// Finite-difference check of every FusionParams entry through the total
/// loss on small random instances (one per seed). The width comes from cfg
/// and must not exceed kMaxGradCheckWidth.
GradientSuiteReport run_gradient_suite(const RunConfig& cfg, const GradientSuiteOptions& opt);

}  // namespace spot

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "spotlighter/numerics.hpp"

namespace spot {

/// Name recorded in feature-file provenance so other implementations can
/// reproduce a synthetic set bit for bit.
inline constexpr const char* kRngAlgorithm = "mt19937_64/u53/box-muller";

/// Deterministic random source: std::mt19937_64 (fully specified by the C++
/// standard), uniform doubles from the top 53 bits, Gaussians by the
/// Box-Muller transform with the sine half cached. Nothing here touches global
/// state, and the distributions are ours so results do not depend on the
/// standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n);

  double gaussian();

  /// Isotropic Gaussian vector of the given width.
  Vector gaussian_vector(std::size_t width);

  Vector unit_vector(std::size_t width);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent child seed (splitmix64 finalizer over seed ^ stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace spot

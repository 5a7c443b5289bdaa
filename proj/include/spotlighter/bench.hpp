// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "spotlighter/pipeline.hpp"

namespace spot {

inline constexpr std::size_t kMinBenchItems = 100;
inline constexpr std::size_t kMinBenchReps = 5;

/// Analytic floating-point operation count of one inference (scoring,
/// class matching, both fusion tiers and classification) with k activated
/// tokens out of n.
double inference_flops(std::size_t n_tok, std::size_t k, std::size_t width, std::size_t n_proto,
                       std::size_t n_classes, std::size_t hidden, bool semantic_on = true);

struct BenchRow {
  std::size_t k = 0;
  bool full_reference = false;  // k = n_tok, every token kept
  double items_per_sec = 0.0;   // median over repetitions
  double min_items_per_sec = 0.0;
  double max_items_per_sec = 0.0;
  std::vector<double> rep_seconds;
  double accuracy = 0.0;  // %, when the workload is labelled
  double flops = 0.0;
};

struct ThroughputReport {
  std::size_t items = 0;
  std::size_t n_tok = 0;
  std::size_t reps = 0;
  std::size_t warmup = 0;
  std::vector<BenchRow> rows;  // k sweep in the given order, then the full reference
  std::size_t trainable_param_count = 0;
  std::size_t analytic_param_count = 0;
  std::string param_note;
};

/// Times predict over the workload for every k (warmup passes excluded) and
/// for the full-token reference. Throws WorkloadTooSmall below
/// kMinBenchItems items.
ThroughputReport bench_throughput(const TrainedState& state, const FeatureSet& workload,
                                  const std::vector<std::size_t>& ks,
                                  std::size_t reps = kMinBenchReps, std::size_t warmup = 1);

std::string bench_csv(const ThroughputReport& report);

}  // namespace spot

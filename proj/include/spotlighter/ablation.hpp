// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "spotlighter/pipeline.hpp"

namespace spot {

struct AblationCell {
  std::size_t index = 0;
  bool semantic_on = true;
  InitMode init_mode = InitMode::TextSeeded;
  bool recalc_on = true;
  SelectionVariant variant = SelectionVariant::TopK;
  TierMode tier = TierMode::Both;
};

/// semantic {on, off} x init {text, random} x recalc {on, off} x
/// variant {top-k, bottom-k, remove-top-k} x tier {both, lev1, lev2}, with the
/// tier varying fastest.
std::vector<AblationCell> ablation_grid();

struct AblationRow {
  AblationCell cell;
  Metrics metrics;
  double items_per_sec = 0.0;  // evaluation throughput over base + novel items
  bool ok = false;
  std::string error;
};

using AblationCallback = std::function<void(const AblationRow&)>;

/// Trains once per (semantic, init, recalc, variant) setting and evaluates
/// each tier mode at inference. A failing cell is recorded and the sweep
/// continues.
std::vector<AblationRow> run_ablation(const RunConfig& base, const Episode& episode,
                                      const AblationCallback& on_row = {});

std::string ablation_csv_header();
std::string ablation_csv_row(const AblationRow& row);

}  // namespace spot

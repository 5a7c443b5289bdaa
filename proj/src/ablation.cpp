// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/ablation.hpp"

#include <chrono>
#include <cstdio>
#include <optional>

#include "spotlighter/error.hpp"

namespace spot {

std::vector<AblationCell> ablation_grid() {
  std::vector<AblationCell> cells;
  for (bool semantic : {true, false}) {
    for (InitMode init : {InitMode::TextSeeded, InitMode::Random}) {
      for (bool recalc : {true, false}) {
        for (auto variant : {SelectionVariant::TopK, SelectionVariant::BottomK,
                             SelectionVariant::RemoveTopK}) {
          for (auto tier : {TierMode::Both, TierMode::Lev1, TierMode::Lev2}) {
            cells.push_back({cells.size(), semantic, init, recalc, variant, tier});
          }
        }
      }
    }
  }
  return cells;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const Episode& episode,
                                      const AblationCallback& on_row) {
  std::vector<AblationRow> rows;
  std::optional<TrainedState> state;
  std::string train_error;
  for (const AblationCell& cell : ablation_grid()) {
    RunConfig cfg = base;
    cfg.semantic_on = cell.semantic_on;
    cfg.init_mode = cell.init_mode;
    cfg.recalc_on = cell.recalc_on;
    cfg.selection_variant = cell.variant;
    if (cell.tier == TierMode::Both) {
      state.reset();
      train_error.clear();
      try {
        state = train(cfg, episode.base_train);
      } catch (const std::exception& e) {
        train_error = e.what();
      }
    }
    AblationRow row;
    row.cell = cell;
    if (!state) {
      row.error = train_error.empty() ? "training did not run" : train_error;
    } else {
      try {
        TrainedState eval_state = *state;
        eval_state.config.tier_mode = cell.tier;
        const auto t0 = std::chrono::steady_clock::now();
        row.metrics = evaluate(eval_state, episode.base_test, episode.novel_test);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double n = static_cast<double>(episode.base_test.size() + episode.novel_test.size());
        row.items_per_sec = n / std::max(secs, 1e-12);
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_csv_header() {
  return "cell,semantic,init,recalc,variant,tier,base,novel,hm,items_per_sec,status,error";
}

std::string ablation_csv_row(const AblationRow& row) {
  std::string err = row.error;
  for (char& ch : err) {
    if (ch == ',' || ch == '\n' || ch == '"') ch = ';';
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.2f,%.1f", row.metrics.base, row.metrics.novel,
                row.metrics.hm, row.items_per_sec);
  const AblationCell& c = row.cell;
  return std::to_string(c.index) + "," + (c.semantic_on ? "on" : "off") + "," +
         to_string(c.init_mode) + "," + (c.recalc_on ? "on" : "off") + "," +
         to_string(c.variant) + "," + to_string(c.tier) + "," + buf + "," +
         (row.ok ? "ok" : "error") + "," + err;
}

}  // namespace spot

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "spotlighter/error.hpp"

namespace spot {

double inference_flops(std::size_t n_tok, std::size_t k, std::size_t width, std::size_t n_proto,
                       std::size_t n_classes, std::size_t hidden, bool semantic_on) {
  const double n = static_cast<double>(n_tok);
  const double d = static_cast<double>(width);
  const double kp = static_cast<double>(n_proto);
  const double c = static_cast<double>(n_classes);
  double f = 3.0 * n * d;                     // token normalization
  f += n * d + 2.0 * c * kp * d;              // pooling and class matching
  f += 2.0 * n * d;                           // text scores
  if (semantic_on) f += 2.0 * n * kp * d;     // prototype scores
  f += 2.0 * static_cast<double>(k) * kp * d;  // tier re-ranking
  const std::size_t tier1 = (k + 1) / 2;
  for (std::size_t m : {tier1, k - tier1}) {
    if (m == 0) continue;
    const double md = static_cast<double>(m);
    f += transformer_block_flops(n_proto, m, width, hidden);
    f += transformer_block_flops(n_proto + m, n_proto + m, width, hidden);
    f += 4.0 * c * md * d + 4.0 * c * d * d;  // matching, aggregation and linear map
  }
  f += 2.0 * kp * d + 2.0 * c * d + 2.0 * c * d;  // pooling and class cosines
  return f;
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

BenchRow run_row(const TrainedState& base_state, const FeatureSet& workload,
                 const MemoryBank& bank, std::size_t k, bool full, std::size_t reps,
                 std::size_t warmup) {
  TrainedState state = base_state;
  state.config.k_act = k;
  BenchRow row;
  row.k = k;
  row.full_reference = full;
  const RunConfig& cfg = state.config;
  row.flops = inference_flops(workload.n_tok, k, cfg.width, cfg.n_proto, workload.n_classes(),
                              cfg.hidden(), cfg.semantic_on);
  std::size_t correct = 0;
  const auto pass = [&](bool tally) {
    for (std::size_t i = 0; i < workload.items.size(); ++i) {
      const auto p = predict(workload.items[i], state, workload.text_embeddings, bank);
      if (tally && workload.has_labels && p.label == workload.labels[i]) ++correct;
    }
  };
  for (std::size_t w = 0; w < warmup; ++w) pass(w == 0);
  if (warmup == 0) pass(true);
  std::vector<double> ips;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    pass(false);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.rep_seconds.push_back(secs);
    ips.push_back(static_cast<double>(workload.items.size()) / std::max(secs, 1e-12));
  }
  row.items_per_sec = median(ips);
  row.min_items_per_sec = *std::min_element(ips.begin(), ips.end());
  row.max_items_per_sec = *std::max_element(ips.begin(), ips.end());
  row.accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(workload.items.size());
  return row;
}

}  // namespace

ThroughputReport bench_throughput(const TrainedState& state, const FeatureSet& workload,
                                  const std::vector<std::size_t>& ks, std::size_t reps,
                                  std::size_t warmup) {
  if (workload.items.size() < kMinBenchItems) {
    throw Error(ErrorCode::WorkloadTooSmall,
                std::to_string(workload.items.size()) + " items, need at least " +
                    std::to_string(kMinBenchItems));
  }
  if (reps < kMinBenchReps) {
    throw Error(ErrorCode::Config, "at least " + std::to_string(kMinBenchReps) + " repetitions");
  }
  if (ks.empty()) throw Error(ErrorCode::Config, "empty k list");
  for (std::size_t k : ks) {
    if (k < 1 || k > workload.n_tok) {
      throw Error(ErrorCode::KOutOfRange, "k=" + std::to_string(k) + " outside [1, " +
                                              std::to_string(workload.n_tok) + "]");
    }
  }
  const MemoryBank bank = bank_for(state, workload);
  ThroughputReport rep;
  rep.items = workload.items.size();
  rep.n_tok = workload.n_tok;
  rep.reps = reps;
  rep.warmup = warmup;
  for (std::size_t k : ks) rep.rows.push_back(run_row(state, workload, bank, k, false, reps, warmup));
  rep.rows.push_back(run_row(state, workload, bank, workload.n_tok, true, reps, warmup));
  rep.trainable_param_count = state.params.parameter_count();
  rep.analytic_param_count = FusionParams::parameter_count(state.config.width,
                                                           state.config.hidden(),
                                                           state.config.shared_irm);
  rep.param_note = "exact count of every trainable tensor";
  return rep;
}

std::string bench_csv(const ThroughputReport& report) {
  std::string out = "k,full_reference,items_per_sec,min_items_per_sec,max_items_per_sec,"
                    "accuracy,flops\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%zu,%d,%.3f,%.3f,%.3f,%.2f,%.0f\n", r.k,
                  r.full_reference ? 1 : 0, r.items_per_sec, r.min_items_per_sec,
                  r.max_items_per_sec, r.accuracy, r.flops);
    out += buf;
  }
  return out;
}

}  // namespace spot

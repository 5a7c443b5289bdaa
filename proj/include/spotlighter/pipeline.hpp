// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spotlighter/config.hpp"
#include "spotlighter/features.hpp"
#include "spotlighter/memory_bank.hpp"
#include "spotlighter/model.hpp"
#include "spotlighter/objectives.hpp"
#include "spotlighter/representative.hpp"

namespace spot {

struct EpochRecord {
  LossBreakdown loss;       // mean over the epoch's items
  double train_accuracy = 0.0;  // % of items whose training-path logits pick the label

  bool operator==(const EpochRecord&) const = default;
};

struct TrainedState {
  RunConfig config;
  FusionParams params;
  TransformerBlockParams theta;  // frozen
  MemoryBank bank;               // base categories
  std::vector<EpochRecord> history;

  std::size_t width() const { return params.width(); }
  bool operator==(const TrainedState&) const = default;
};

/// Fresh state for a training set's text embeddings: seeded fusion weights,
/// seeded frozen theta and an initialized bank.
TrainedState init_state(const RunConfig& cfg, const Matrix& text_embeddings);

/// Called after every epoch with the 0-based epoch index.
using EpochCallback = std::function<void(std::size_t, const EpochRecord&)>;

/// SGD on the fusion parameters only. Items are visited in a seeded shuffled
/// order each epoch; every step is one item.
TrainedState train(const RunConfig& cfg, const FeatureSet& train_set,
                   const EpochCallback& on_epoch = {});

/// One optimizer step: p -= lr * (momentum ? velocity : grad), then rounding
/// of every parameter to binary32.
void sgd_step(FusionParams& params, const FusionParams& grads, double lr, double momentum,
              FusionParams* velocity);

/// Bank used to evaluate a set: the trained bank for the training categories,
/// otherwise a bank seeded on the fly from the set's text embeddings.
MemoryBank bank_for(const TrainedState& state, const FeatureSet& set);

struct Prediction {
  std::size_t label = 0;
  Vector probabilities;
};

Prediction predict(const Matrix& visual_tokens, const TrainedState& state, const Matrix& text,
                   const MemoryBank& bank);

struct SplitMetrics {
  double accuracy = 0.0;  // %
  std::vector<double> per_class;  // %
  std::size_t correct = 0;
  std::size_t total = 0;
};

SplitMetrics evaluate_split(const TrainedState& state, const FeatureSet& set);

struct Metrics {
  double base = 0.0;
  double novel = 0.0;
  double hm = 0.0;
  std::vector<double> base_per_class;
  std::vector<double> novel_per_class;
};

Metrics evaluate(const TrainedState& state, const FeatureSet& base, const FeatureSet& novel);

/// 2bn / (b + n); 0 when b + n = 0.
double harmonic_mean(double base, double novel);

}  // namespace spot

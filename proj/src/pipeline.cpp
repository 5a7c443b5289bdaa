// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include "spotlighter/error.hpp"
#include "spotlighter/rng.hpp"

namespace spot {

namespace {

enum SeedStream : std::uint64_t {
  kParamStream = 1,
  kThetaStream = 2,
  kBankStream = 3,
  kNovelBankStream = 4,
  kShuffleStream = 5,
};

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_set(const RunConfig& cfg, const FeatureSet& set) {
  if (set.items.empty()) throw Error(ErrorCode::EmptySplit, "feature set has no items");
  if (set.width != cfg.width) {
    throw Error(ErrorCode::DimMismatch, "data width " + std::to_string(set.width) +
                                            " differs from configured width " +
                                            std::to_string(cfg.width));
  }
}

}  // namespace

TrainedState init_state(const RunConfig& cfg, const Matrix& text_embeddings) {
  cfg.validate();
  if (text_embeddings.cols() != cfg.width) {
    throw Error(ErrorCode::DimMismatch, "text width differs from configured width");
  }
  TrainedState s;
  s.config = cfg;
  Rng prng(derive_seed(cfg.seed, kParamStream));
  s.params = FusionParams::initial(cfg.width, cfg.heads, cfg.hidden(), cfg.shared_irm, cfg.alpha,
                                   cfg.init_std, prng);
  Rng trng(derive_seed(cfg.seed, kThetaStream));
  s.theta = TransformerBlockParams::random(cfg.width, cfg.heads, cfg.hidden(), cfg.init_std, false,
                                           trng);
  for (auto& t : s.theta.tensors("")) round_to_f32(t.data);
  s.bank = init_bank(text_embeddings, cfg.n_proto, cfg.init_mode, cfg.init_sigma,
                     derive_seed(cfg.seed, kBankStream), cfg.beta);
  s.bank.renormalize = cfg.renormalize_protos;
  return s;
}

void sgd_step(FusionParams& params, const FusionParams& grads, double lr, double momentum,
              FusionParams* velocity) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  std::vector<TensorView> v;
  if (momentum > 0.0) {
    if (!velocity) throw Error(ErrorCode::InvalidArgument, "momentum needs a velocity buffer");
    v = velocity->tensors();
  }
  for (std::size_t t = 0; t < p.size(); ++t) {
    auto& pd = p[t].data;
    const auto& gd = g[t].data;
    for (std::size_t i = 0; i < pd.size(); ++i) {
      double step = gd[i];
      if (momentum > 0.0) {
        v[t].data[i] = momentum * v[t].data[i] + gd[i];
        step = v[t].data[i];
      }
      pd[i] -= lr * step;
    }
    round_to_f32(pd);
  }
}

TrainedState train(const RunConfig& cfg, const FeatureSet& train_set,
                   const EpochCallback& on_epoch) {
  check_set(cfg, train_set);
  if (!train_set.has_labels) throw Error(ErrorCode::EmptySplit, "training set has no labels");
  TrainedState s = init_state(cfg, train_set.text_embeddings);
  const Matrix& text = train_set.text_embeddings;

  const FusionParams zero = s.params.zeros_like();
  FusionParams velocity = zero;
  std::vector<std::size_t> order(train_set.items.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle(derive_seed(cfg.seed, kShuffleStream));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    LossBreakdown sum;
    std::size_t correct = 0;
    for (std::size_t idx : order) {
      const std::size_t label = train_set.labels[idx];
      FusionParams grads = zero;
      ItemResult r;
      try {
        const ItemContext ctx = prepare_training_item(train_set.items[idx], label, text, s.bank, cfg);
        r = item_loss(ctx, label, text, s.params, s.theta, cfg, &grads);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        throw Error(ErrorCode::NonFiniteLoss, std::string(e.what()) + " (epoch " +
                                                  std::to_string(epoch + 1) + ", item " +
                                                  std::to_string(idx) + ")");
      }
      sgd_step(s.params, grads, cfg.lr, cfg.momentum, &velocity);
      sum += r.loss;
      if (argmax(r.logits) == label) ++correct;
    }
    const double n = static_cast<double>(order.size());
    EpochRecord rec{sum.scaled(1.0 / n), 100.0 * static_cast<double>(correct) / n};
    s.history.push_back(rec);
    if (on_epoch) on_epoch(epoch, rec);
  }
  return s;
}

MemoryBank bank_for(const TrainedState& state, const FeatureSet& set) {
  const RunConfig& cfg = state.config;
  if (set.split == Split::Base) {
    if (set.n_classes() != state.bank.n_classes()) {
      throw Error(ErrorCode::DimMismatch, "base set class count differs from the trained bank");
    }
    return state.bank;
  }
  MemoryBank bank = init_bank(set.text_embeddings, cfg.n_proto, cfg.init_mode, cfg.init_sigma,
                              derive_seed(cfg.seed, kNovelBankStream), cfg.beta);
  bank.renormalize = cfg.renormalize_protos;
  return bank;
}

Prediction predict(const Matrix& visual_tokens, const TrainedState& state, const Matrix& text,
                   const MemoryBank& bank) {
  const ItemContext ctx = prepare_inference_item(visual_tokens, text, bank, state.config);
  const Vector logits = item_logits(ctx, text, state.params, state.theta, state.config);
  Prediction p;
  p.probabilities = softmax(logits, state.config.tau);
  p.label = argmax(p.probabilities);
  return p;
}

SplitMetrics evaluate_split(const TrainedState& state, const FeatureSet& set) {
  check_set(state.config, set);
  if (!set.has_labels) throw Error(ErrorCode::EmptySplit, "evaluation set has no labels");
  const MemoryBank bank = bank_for(state, set);
  const std::size_t n_classes = set.n_classes();
  std::vector<std::size_t> hits(n_classes, 0), counts(n_classes, 0);
  SplitMetrics m;
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    const std::size_t label = set.labels[i];
    ++counts[label];
    if (predict(set.items[i], state, set.text_embeddings, bank).label == label) {
      ++hits[label];
      ++m.correct;
    }
  }
  m.total = set.items.size();
  m.accuracy = 100.0 * static_cast<double>(m.correct) / static_cast<double>(m.total);
  for (std::size_t c = 0; c < n_classes; ++c) {
    m.per_class.push_back(counts[c] ? 100.0 * static_cast<double>(hits[c]) /
                                          static_cast<double>(counts[c])
                                    : 0.0);
  }
  return m;
}

Metrics evaluate(const TrainedState& state, const FeatureSet& base, const FeatureSet& novel) {
  const SplitMetrics b = evaluate_split(state, base);
  const SplitMetrics n = evaluate_split(state, novel);
  return {b.accuracy, n.accuracy, harmonic_mean(b.accuracy, n.accuracy), b.per_class,
          n.per_class};
}

double harmonic_mean(double base, double novel) {
  const double s = base + novel;
  return s == 0.0 ? 0.0 : 2.0 * base * novel / s;
}

}  // namespace spot

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "spotlighter/activation.hpp"
#include "spotlighter/config.hpp"
#include "spotlighter/memory_bank.hpp"
#include "spotlighter/objectives.hpp"
#include "spotlighter/representative.hpp"

namespace spot {

/// Everything about one item that does not depend on the trainable
/// parameters: unit-normalized tokens, the querying category's prototypes
/// (after any bank update) and the two token tiers.
struct ItemContext {
  Matrix tokens;
  std::size_t query_class = 0;
  Matrix class_protos;
  Tiers tiers;
  double local = 0.0;
};

/// Training path: scores against the ground-truth category, updates that
/// category's prototypes in place, computes the local loss on the updated
/// bank and stratifies.
ItemContext prepare_training_item(const Matrix& raw_tokens, std::size_t label,
                                  const Matrix& text, MemoryBank& bank, const RunConfig& cfg);

/// Label-free path: the query category comes from match_class and the bank
/// is only read.
ItemContext prepare_inference_item(const Matrix& raw_tokens, const Matrix& text,
                                   const MemoryBank& bank, const RunConfig& cfg);

struct ItemResult {
  LossBreakdown loss;
  Vector logits;  // cos(pooled visual rep, pooled class text rep)
};

/// Loss of one prepared item. When grads is non-null it must be shaped like
/// params (see FusionParams::zeros_like) and receives the accumulated gradient of
/// loss.total.
ItemResult item_loss(const ItemContext& ctx, std::size_t label, const Matrix& text,
                     const FusionParams& params, const TransformerBlockParams& theta,
                     const RunConfig& cfg, FusionParams* grads = nullptr);

/// Class logits cos(...) of a prepared item, with no loss terms.
Vector item_logits(const ItemContext& ctx, const Matrix& text, const FusionParams& params,
                   const TransformerBlockParams& theta, const RunConfig& cfg);

}  // namespace spot

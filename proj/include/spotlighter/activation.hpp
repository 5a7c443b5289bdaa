// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "spotlighter/numerics.hpp"

namespace spot {

enum class SelectionVariant { TopK, BottomK, RemoveTopK };

std::string to_string(SelectionVariant v);
SelectionVariant parse_selection_variant(const std::string& s);

/// Cosine of each token with the class text embedding.
Vector sample_scores(const Matrix& visual_tokens, std::span<const double> text_embedding);

/// Best prototype cosine for each token.
Vector semantic_scores(const Matrix& visual_tokens, const Matrix& class_protos);

/// Token ranking used by every selection variant:
///   top-k        the k largest scores, descending (ties: lower index first)
///   bottom-k     the k smallest scores, ascending (ties: lower index first)
///   remove-top-k everything except the top k, descending
/// Throws KOutOfRange unless 1 <= k <= n.
std::vector<std::size_t> select_activated(std::span<const double> scores, std::size_t k,
                                          SelectionVariant variant);

/// Number of tokens a variant keeps out of n.
std::size_t selected_count(std::size_t n, std::size_t k, SelectionVariant variant);

struct ActivationProfile {
  Vector sample;
  Vector semantic;
  Vector combined;
  std::vector<std::size_t> selected;
  std::vector<std::size_t> tier1;
  std::vector<std::size_t> tier2;
  bool semantic_on = true;
  bool recalc_on = true;
  SelectionVariant variant = SelectionVariant::TopK;
};

/// Scores every token against one category and selects the activated set.
/// Tiers are left empty; see stratify.
ActivationProfile score_and_select(const Matrix& visual_tokens,
                                   std::span<const double> text_embedding,
                                   const Matrix& class_protos, std::size_t k,
                                   SelectionVariant variant, bool semantic_on);

struct Tiers {
  std::vector<std::size_t> tier1;
  std::vector<std::size_t> tier2;
};

/// Splits the selected tokens into the top ceil(m/2) and the remainder. With
/// recalc_on the ranking uses semantic scores against class_protos (the
/// post-update prototypes); otherwise it uses the given scores, which are
/// indexed by token id.
Tiers stratify(const Matrix& visual_tokens, std::span<const std::size_t> selected,
               std::span<const double> scores, const Matrix& class_protos, bool recalc_on);

}  // namespace spot

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/activation.hpp"

#include <algorithm>
#include <numeric>

#include "spotlighter/error.hpp"

namespace spot {

std::string to_string(SelectionVariant v) {
  switch (v) {
    case SelectionVariant::TopK: return "top-k";
    case SelectionVariant::BottomK: return "bottom-k";
    case SelectionVariant::RemoveTopK: return "remove-top-k";
  }
  return "top-k";
}

SelectionVariant parse_selection_variant(const std::string& s) {
  if (s == "top-k") return SelectionVariant::TopK;
  if (s == "bottom-k") return SelectionVariant::BottomK;
  if (s == "remove-top-k") return SelectionVariant::RemoveTopK;
  throw Error(ErrorCode::Config, "selection_variant must be top-k, bottom-k or remove-top-k");
}

Vector sample_scores(const Matrix& visual_tokens, std::span<const double> text_embedding) {
  const Vector t = l2_normalize(text_embedding);
  if (t.size() != visual_tokens.cols()) throw Error(ErrorCode::DimMismatch, "text width");
  Vector out(visual_tokens.rows());
  for (std::size_t i = 0; i < visual_tokens.rows(); ++i) {
    const auto row = visual_tokens.row(i);
    const double n = norm(row);
    if (!(n >= 1e-12)) throw Error(ErrorCode::ZeroVector, "zero visual token");
    out[i] = dot(row, t) / n;
  }
  return out;
}

Vector semantic_scores(const Matrix& visual_tokens, const Matrix& class_protos) {
  if (class_protos.rows() == 0) throw Error(ErrorCode::InvalidK, "no prototypes");
  const Matrix cos = cosine_matrix(visual_tokens, class_protos);
  Vector out(cos.rows());
  for (std::size_t i = 0; i < cos.rows(); ++i) {
    const auto row = cos.row(i);
    out[i] = *std::max_element(row.begin(), row.end());
  }
  return out;
}

std::size_t selected_count(std::size_t n, std::size_t k, SelectionVariant variant) {
  return variant == SelectionVariant::RemoveTopK ? n - k : k;
}

std::vector<std::size_t> select_activated(std::span<const double> scores, std::size_t k,
                                          SelectionVariant variant) {
  const std::size_t n = scores.size();
  if (k < 1 || k > n) {
    throw Error(ErrorCode::KOutOfRange,
                "k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (variant == SelectionVariant::BottomK) {
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                        return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
                      });
    idx.resize(k);
    return idx;
  }
  const auto desc = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  if (variant == SelectionVariant::TopK) {
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), desc);
    idx.resize(k);
    return idx;
  }
  std::sort(idx.begin(), idx.end(), desc);
  idx.erase(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  return idx;
}

ActivationProfile score_and_select(const Matrix& visual_tokens,
                                   std::span<const double> text_embedding,
                                   const Matrix& class_protos, std::size_t k,
                                   SelectionVariant variant, bool semantic_on) {
  ActivationProfile p;
  p.variant = variant;
  p.semantic_on = semantic_on;
  p.sample = sample_scores(visual_tokens, text_embedding);
  p.combined = p.sample;
  if (semantic_on) {
    p.semantic = semantic_scores(visual_tokens, class_protos);
    for (std::size_t i = 0; i < p.combined.size(); ++i) p.combined[i] += p.semantic[i];
  }
  p.selected = select_activated(p.combined, k, variant);
  return p;
}

Tiers stratify(const Matrix& visual_tokens, std::span<const std::size_t> selected,
               std::span<const double> scores, const Matrix& class_protos, bool recalc_on) {
  if (selected.empty()) throw Error(ErrorCode::EmptySelection, "no activated tokens to stratify");
  // rank[i] is the score of selected[i]
  Vector rank(selected.size());
  if (recalc_on) {
    const Matrix tok = gather_rows(visual_tokens, selected);
    rank = semantic_scores(tok, class_protos);
  } else {
    for (std::size_t i = 0; i < selected.size(); ++i) {
      if (selected[i] >= scores.size()) throw Error(ErrorCode::DimMismatch, "score index");
      rank[i] = scores[selected[i]];
    }
  }
  std::vector<std::size_t> order(selected.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rank[a] > rank[b] || (rank[a] == rank[b] && selected[a] < selected[b]);
  });
  const std::size_t n1 = (selected.size() + 1) / 2;
  Tiers t;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n1 ? t.tier1 : t.tier2).push_back(selected[order[i]]);
  }
  return t;
}

}  // namespace spot

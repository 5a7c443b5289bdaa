// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spotlighter/numerics.hpp"

namespace spot {

enum class InitMode { TextSeeded, Random };

std::string to_string(InitMode m);
InitMode parse_init_mode(const std::string& s);

/// Semantic memory bank: K prototypes of width d for each of C categories.
struct MemoryBank {
  std::vector<Matrix> prototypes;  // C entries, each K x d
  double beta = 0.8;
  InitMode init_mode = InitMode::TextSeeded;
  bool renormalize = true;

  std::size_t n_classes() const { return prototypes.size(); }
  std::size_t n_protos() const { return prototypes.empty() ? 0 : prototypes.front().rows(); }
  std::size_t width() const { return prototypes.empty() ? 0 : prototypes.front().cols(); }

  const Matrix& class_prototypes(std::size_t c) const;

  /// Storage at binary32 precision for one category.
  std::size_t bytes_per_category() const { return n_protos() * width() * sizeof(float); }

  bool operator==(const MemoryBank&) const = default;
};

/// text-seeded: prototype (c, k) = normalize(T_c + sigma * g / sqrt(d));
/// random: independent random unit vectors.
MemoryBank init_bank(const Matrix& text_embeddings, std::size_t n_protos, InitMode mode,
                     double sigma, std::uint64_t seed, double beta = 0.8);

/// Category whose best prototype is most cosine-similar to the pooled feature;
/// ties go to the lowest category.
std::size_t match_class(std::span<const double> pooled_visual, const MemoryBank& bank);

/// Mean-then-normalize pooling of a token grid.
Vector pool_tokens(const Matrix& tokens);

struct Assignment {
  Matrix soft;                     // n x K, rows are probability vectors
  std::vector<std::size_t> hard;   // argmax of each row, lowest index on ties
};

Assignment assign_tokens(const Matrix& tok_act, const Matrix& class_protos, double temperature);

/// u_j <- beta * u_j + (1 - beta) * sum_{i in bucket j} D[i, j] * tok_i for
/// prototypes with a non-empty bucket; renormalized when bank.renormalize.
void momentum_update(MemoryBank& bank, std::size_t category, const Assignment& assignment,
                     const Matrix& tok_act);

/// Cross-entropy of label under logits s_c / temperature, where s_c is the
/// mean over tokens of the best prototype cosine in category c.
double local_loss(const MemoryBank& bank, const Matrix& tok_act, std::size_t label,
                  double temperature);

}  // namespace spot

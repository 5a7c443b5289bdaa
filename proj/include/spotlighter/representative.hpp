// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "spotlighter/activation.hpp"
#include "spotlighter/numerics.hpp"
#include "spotlighter/transformer.hpp"

namespace spot {

class Rng;

enum class TierMode { Both, Lev1, Lev2 };

std::string to_string(TierMode m);
TierMode parse_tier_mode(const std::string& s);
bool tier_active(TierMode mode, int tier);  // tier is 0 (lev1) or 1 (lev2)

/// The trainable parameters: IRM blocks (one per tier, or one shared) and the
/// TRM linear layer mapping [text ; aggregated tokens] (2d) to d.
struct FusionParams {
  std::vector<TransformerBlockParams> irm;
  Matrix trm_weight;  // 2d x d
  Vector trm_bias;    // d
  double alpha = 0.2;

  std::size_t width() const { return trm_bias.size(); }
  bool shared_irm() const { return irm.size() == 1; }
  const TransformerBlockParams& irm_for_tier(int tier) const;
  TransformerBlockParams& irm_for_tier(int tier);

  /// Zero weights and biases; layer norms keep unit scale, so every block is
  /// a residual identity.
  static FusionParams zeros(std::size_t width, std::size_t heads, std::size_t hidden,
                            bool shared_irm, double alpha);

  /// Same shapes with every entry (layer-norm scales included) set to 0, for
  /// gradient and velocity buffers.
  FusionParams zeros_like() const;

  /// IRM projections start near identity, FFN and TRM weights at small noise.
  static FusionParams initial(std::size_t width, std::size_t heads, std::size_t hidden,
                              bool shared_irm, double alpha, double init_std, Rng& rng);

  std::vector<TensorView> tensors();
  std::vector<ConstTensorView> tensors() const;
  std::size_t parameter_count() const;

  /// Analytic count: blocks * (4(d^2+d) + 4d + 2dh + h + d) + 2d^2 + d.
  static std::size_t parameter_count(std::size_t width, std::size_t hidden, bool shared_irm);

  bool operator==(const FusionParams&) const = default;
};

/// Prototypes query the tier tokens: transformer_block(Q = U, KV = tier).
Matrix irm_fuse(const Matrix& class_protos, const Matrix& tier_tokens,
                const TransformerBlockParams& irm);

struct VisualRep {
  Matrix rep;          // first K rows of theta([U_hat ; tier])
  Matrix passthrough;  // remaining m rows
};

/// Full self-attention of theta over the concatenation [U_hat ; tier tokens].
VisualRep extract_visual_rep(const Matrix& fused_protos, const Matrix& tier_tokens,
                             const TransformerBlockParams& theta);

/// Soft matching of each text row to the tier tokens (softmax of cosine /
/// temperature); returns the weighted token aggregate per text row.
Matrix trm_aggregate(const Matrix& text_tokens, const Matrix& tier_tokens, double temperature,
                     Matrix* weights = nullptr);

/// rep_i = alpha * ([text_i ; a_i] W + b) + text_i
Matrix trm_fuse(const Matrix& text_tokens, const Matrix& tier_tokens, const Matrix& trm_weight,
                std::span<const double> trm_bias, double alpha, double temperature);

struct TierRepresentatives {
  int tier = 0;
  Matrix visual;  // K x d
  Matrix text;    // C x d
};

struct Representatives {
  std::vector<TierRepresentatives> tiers;

  /// Tier outputs stacked along the token axis.
  Matrix visual() const;
  Matrix text() const;
};

Representatives build_representatives(const Tiers& tiers, const Matrix& visual_tokens,
                                      const Matrix& class_protos, const Matrix& text_tokens,
                                      const FusionParams& params,
                                      const TransformerBlockParams& theta, TierMode mode,
                                      double temperature);

}  // namespace spot

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/representative.hpp"

#include <algorithm>

#include "spotlighter/error.hpp"
#include "spotlighter/rng.hpp"

namespace spot {

std::string to_string(TierMode m) {
  switch (m) {
    case TierMode::Both: return "both";
    case TierMode::Lev1: return "lev1";
    case TierMode::Lev2: return "lev2";
  }
  return "both";
}

TierMode parse_tier_mode(const std::string& s) {
  if (s == "both") return TierMode::Both;
  if (s == "lev1") return TierMode::Lev1;
  if (s == "lev2") return TierMode::Lev2;
  throw Error(ErrorCode::Config, "tier_mode must be both, lev1 or lev2");
}

bool tier_active(TierMode mode, int tier) {
  return mode == TierMode::Both || (mode == TierMode::Lev1 && tier == 0) ||
         (mode == TierMode::Lev2 && tier == 1);
}

const TransformerBlockParams& FusionParams::irm_for_tier(int tier) const {
  return irm.size() == 1 ? irm[0] : irm.at(static_cast<std::size_t>(tier));
}

TransformerBlockParams& FusionParams::irm_for_tier(int tier) {
  return irm.size() == 1 ? irm[0] : irm.at(static_cast<std::size_t>(tier));
}

FusionParams FusionParams::zeros(std::size_t width, std::size_t heads, std::size_t hidden,
                                 bool shared_irm, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::Config, "alpha outside [0, 1]");
  FusionParams p;
  p.irm.assign(shared_irm ? 1 : 2, TransformerBlockParams::zeros(width, heads, hidden));
  p.trm_weight = Matrix(2 * width, width);
  p.trm_bias = Vector(width, 0.0);
  p.alpha = alpha;
  return p;
}

FusionParams FusionParams::zeros_like() const {
  FusionParams p = *this;
  for (auto& t : p.tensors()) std::fill(t.data.begin(), t.data.end(), 0.0);
  return p;
}

FusionParams FusionParams::initial(std::size_t width, std::size_t heads, std::size_t hidden,
                                   bool shared_irm, double alpha, double init_std, Rng& rng) {
  FusionParams p = zeros(width, heads, hidden, shared_irm, alpha);
  for (auto& block : p.irm) {
    block = TransformerBlockParams::random(width, heads, hidden, init_std, true, rng);
  }
  for (double& w : p.trm_weight.values()) w = init_std * rng.gaussian();
  for (auto& t : p.tensors()) round_to_f32(t.data);
  return p;
}

namespace {

template <class View, class Self>
std::vector<View> fusion_tensors(Self& p) {
  std::vector<View> out;
  for (std::size_t i = 0; i < p.irm.size(); ++i) {
    auto block = p.irm[i].tensors("irm" + std::to_string(i) + ".");
    out.insert(out.end(), block.begin(), block.end());
  }
  out.push_back(View{"trm.weight", {p.trm_weight.rows(), p.trm_weight.cols()},
                     p.trm_weight.values()});
  out.push_back(View{"trm.bias", {p.trm_bias.size()}, p.trm_bias});
  return out;
}

}  // namespace

std::vector<TensorView> FusionParams::tensors() { return fusion_tensors<TensorView>(*this); }

std::vector<ConstTensorView> FusionParams::tensors() const {
  return fusion_tensors<ConstTensorView>(*this);
}

std::size_t FusionParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.data.size();
  return n;
}

std::size_t FusionParams::parameter_count(std::size_t width, std::size_t hidden,
                                          bool shared_irm) {
  const std::size_t blocks = shared_irm ? 1 : 2;
  return blocks * TransformerBlockParams::parameter_count(width, hidden) + 2 * width * width +
         width;
}

Matrix irm_fuse(const Matrix& class_protos, const Matrix& tier_tokens,
                const TransformerBlockParams& irm) {
  if (tier_tokens.rows() == 0) throw Error(ErrorCode::EmptySelection, "IRM needs tier tokens");
  return transformer_block(class_protos, tier_tokens, irm);
}

VisualRep extract_visual_rep(const Matrix& fused_protos, const Matrix& tier_tokens,
                             const TransformerBlockParams& theta) {
  const Matrix seq = vstack(fused_protos, tier_tokens);
  const Matrix out = transformer_block(seq, seq, theta);
  return {slice_rows(out, 0, fused_protos.rows()),
          slice_rows(out, fused_protos.rows(), out.rows())};
}

Matrix trm_aggregate(const Matrix& text_tokens, const Matrix& tier_tokens, double temperature,
                     Matrix* weights) {
  if (tier_tokens.rows() == 0) throw Error(ErrorCode::EmptySelection, "TRM needs tier tokens");
  const Matrix cos = cosine_matrix(text_tokens, tier_tokens);
  Matrix w(cos.rows(), cos.cols());
  for (std::size_t i = 0; i < cos.rows(); ++i) {
    const Vector p = softmax(cos.row(i), temperature);
    std::copy(p.begin(), p.end(), w.row(i).begin());
  }
  Matrix agg = matmul(w, tier_tokens);
  if (weights) *weights = std::move(w);
  return agg;
}

Matrix trm_fuse(const Matrix& text_tokens, const Matrix& tier_tokens, const Matrix& trm_weight,
                std::span<const double> trm_bias, double alpha, double temperature) {
  const std::size_t d = text_tokens.cols();
  if (tier_tokens.cols() != d || trm_weight.rows() != 2 * d || trm_weight.cols() != d ||
      trm_bias.size() != d) {
    throw Error(ErrorCode::DimMismatch, "TRM widths");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha range");
  const Matrix agg = trm_aggregate(text_tokens, tier_tokens, temperature);
  Matrix out = text_tokens;
  if (alpha == 0.0) return out;
  Vector input(2 * d);
  for (std::size_t i = 0; i < text_tokens.rows(); ++i) {
    std::copy(text_tokens.row(i).begin(), text_tokens.row(i).end(), input.begin());
    std::copy(agg.row(i).begin(), agg.row(i).end(), input.begin() + static_cast<std::ptrdiff_t>(d));
    auto row = out.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      double s = trm_bias[c];
      for (std::size_t r = 0; r < 2 * d; ++r) s += input[r] * trm_weight(r, c);
      row[c] += alpha * s;
    }
  }
  return out;
}

Matrix Representatives::visual() const {
  Matrix out;
  for (const auto& t : tiers) out = vstack(out, t.visual);
  return out;
}

Matrix Representatives::text() const {
  Matrix out;
  for (const auto& t : tiers) out = vstack(out, t.text);
  return out;
}

Representatives build_representatives(const Tiers& tiers, const Matrix& visual_tokens,
                                      const Matrix& class_protos, const Matrix& text_tokens,
                                      const FusionParams& params,
                                      const TransformerBlockParams& theta, TierMode mode,
                                      double temperature) {
  Representatives reps;
  for (int tier = 0; tier < 2; ++tier) {
    if (!tier_active(mode, tier)) continue;
    const auto& idx = tier == 0 ? tiers.tier1 : tiers.tier2;
    if (idx.empty()) continue;
    const Matrix tok = gather_rows(visual_tokens, idx);
    const Matrix fused = irm_fuse(class_protos, tok, params.irm_for_tier(tier));
    TierRepresentatives r;
    r.tier = tier;
    r.visual = extract_visual_rep(fused, tok, theta).rep;
    r.text = trm_fuse(text_tokens, tok, params.trm_weight, params.trm_bias, params.alpha,
                      temperature);
    reps.tiers.push_back(std::move(r));
  }
  if (reps.tiers.empty()) {
    throw Error(ErrorCode::EmptySelection, "tier mode " + to_string(mode) + " selects no tokens");
  }
  return reps;
}

}  // namespace spot

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/model.hpp"

#include "spotlighter/error.hpp"

namespace spot {

namespace {

ItemContext prepare(const Matrix& raw_tokens, std::size_t cls, const Matrix& text,
                    const Matrix& protos_before, const RunConfig& cfg, MemoryBank* bank) {
  if (cls >= text.rows()) throw Error(ErrorCode::LabelOutOfRange, "label exceeds class count");
  ItemContext ctx;
  ctx.tokens = normalize_rows(raw_tokens);
  ctx.query_class = cls;
  const ActivationProfile profile = score_and_select(ctx.tokens, text.row(cls), protos_before,
                                                     cfg.k_act,
                                                     cfg.selection_variant, cfg.semantic_on);
  if (profile.selected.empty()) {
    throw Error(ErrorCode::EmptySelection, to_string(cfg.selection_variant) + " keeps no tokens");
  }
  if (bank) {
    const Matrix tok_act = gather_rows(ctx.tokens, profile.selected);
    const Assignment a = assign_tokens(tok_act, protos_before, cfg.assign_temperature);
    momentum_update(*bank, cls, a, tok_act);
    ctx.local = local_loss(*bank, tok_act, cls, cfg.tau);
    ctx.class_protos = bank->class_prototypes(cls);
  } else {
    ctx.class_protos = protos_before;
  }
  ctx.tiers = stratify(ctx.tokens, profile.selected, profile.combined, ctx.class_protos,
                       cfg.recalc_on);
  return ctx;
}

struct TierPass {
  int tier = 0;
  Matrix tier_tokens;
  BlockCache irm_cache;
  BlockCache theta_cache;
  Matrix trm_input;  // C x 2d, [text ; aggregate]
  Matrix visual;     // K x d
  Matrix text;       // C x d
};

std::vector<TierPass> forward_tiers(const ItemContext& ctx, const Matrix& text,
                                    const FusionParams& params,
                                    const TransformerBlockParams& theta, TierMode mode,
                                    double tau) {
  std::vector<TierPass> passes;
  const std::size_t d = text.cols();
  const std::size_t n_proto = ctx.class_protos.rows();
  for (int tier = 0; tier < 2; ++tier) {
    if (!tier_active(mode, tier)) continue;
    const auto& idx = tier == 0 ? ctx.tiers.tier1 : ctx.tiers.tier2;
    if (idx.empty()) continue;
    TierPass p;
    p.tier = tier;
    p.tier_tokens = gather_rows(ctx.tokens, idx);
    const Matrix fused =
        transformer_block(ctx.class_protos, p.tier_tokens, params.irm_for_tier(tier), &p.irm_cache);
    const Matrix seq = vstack(fused, p.tier_tokens);
    p.visual = slice_rows(transformer_block(seq, seq, theta, &p.theta_cache), 0, n_proto);

    const Matrix agg = trm_aggregate(text, p.tier_tokens, tau);
    p.trm_input = Matrix(text.rows(), 2 * d);
    for (std::size_t i = 0; i < text.rows(); ++i) {
      std::copy(text.row(i).begin(), text.row(i).end(), p.trm_input.row(i).begin());
      std::copy(agg.row(i).begin(), agg.row(i).end(),
                p.trm_input.row(i).begin() + static_cast<std::ptrdiff_t>(d));
    }
    Matrix lin = matmul(p.trm_input, params.trm_weight);
    add_row_broadcast(lin, params.trm_bias);
    p.text = text;
    auto out = p.text.values();
    const auto l = lin.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += params.alpha * l[i];
    passes.push_back(std::move(p));
  }
  if (passes.empty()) {
    throw Error(ErrorCode::EmptySelection, "tier mode " + to_string(mode) + " selects no tokens");
  }
  return passes;
}

Matrix stack_visual(const std::vector<TierPass>& passes) {
  Matrix out;
  for (const auto& p : passes) out = vstack(out, p.visual);
  return out;
}

Matrix stack_text(const std::vector<TierPass>& passes) {
  Matrix out;
  for (const auto& p : passes) out = vstack(out, p.text);
  return out;
}

void axpy(double a, const Matrix& x, Matrix& y) {
  auto yv = y.values();
  const auto xv = x.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] += a * xv[i];
}

void add_rows(double a, const Matrix& x, Matrix& y, std::size_t first_row) {
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto dst = y.row(first_row + r);
    const auto src = x.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] += a * src[c];
  }
}

}  // namespace

ItemContext prepare_training_item(const Matrix& raw_tokens, std::size_t label,
                                  const Matrix& text, MemoryBank& bank, const RunConfig& cfg) {
  if (label >= bank.n_classes()) throw Error(ErrorCode::LabelOutOfRange, "label exceeds bank");
  const Matrix protos = bank.class_prototypes(label);
  return prepare(raw_tokens, label, text, protos, cfg, &bank);
}

ItemContext prepare_inference_item(const Matrix& raw_tokens, const Matrix& text,
                                   const MemoryBank& bank, const RunConfig& cfg) {
  const std::size_t m = match_class(pool_tokens(raw_tokens), bank);
  return prepare(raw_tokens, m, text, bank.class_prototypes(m), cfg, nullptr);
}

Vector item_logits(const ItemContext& ctx, const Matrix& text, const FusionParams& params,
                   const TransformerBlockParams& theta, const RunConfig& cfg) {
  const auto passes = forward_tiers(ctx, text, params, theta, cfg.tier_mode, cfg.tau);
  return class_cosines(stack_visual(passes), stack_text(passes), text.rows());
}

ItemResult item_loss(const ItemContext& ctx, std::size_t label, const Matrix& text,
                     const FusionParams& params, const TransformerBlockParams& theta,
                     const RunConfig& cfg, FusionParams* grads) {
  const std::size_t n_classes = text.rows();
  const std::size_t n_proto = ctx.class_protos.rows();
  const auto passes = forward_tiers(ctx, text, params, theta, cfg.tier_mode, cfg.tau);
  const Matrix v_rep = stack_visual(passes);
  const Matrix t_rep = stack_text(passes);
  Matrix t_ori;
  for (std::size_t i = 0; i < passes.size(); ++i) t_ori = vstack(t_ori, text);

  const LossWeights w = cfg.loss_weights();
  const bool want = grads != nullptr;
  Matrix dv(v_rep.rows(), v_rep.cols());
  Matrix dt(t_rep.rows(), t_rep.cols());
  Matrix gv, gt;

  LossBreakdown parts;
  parts.cls = contrastive_cls_loss(v_rep, t_rep, n_classes, label, cfg.tau, want ? &gv : nullptr,
                                   want ? &gt : nullptr);
  if (want) {
    axpy(1.0, gv, dv);
    axpy(1.0, gt, dt);
  }
  for (std::size_t i = 0; i < passes.size(); ++i) {
    const TierPass& p = passes[i];
    const bool high = p.tier == 0;
    if (high ? !cfg.loss_high : !cfg.loss_low) continue;
    const double l = contrastive_cls_loss(p.visual, p.text, n_classes, label, cfg.tau,
                                          want ? &gv : nullptr, want ? &gt : nullptr);
    (high ? parts.cls_high : parts.cls_low) = l;
    if (want) {
      add_rows(w.lambda1, gv, dv, i * n_proto);
      add_rows(w.lambda1, gt, dt, i * n_classes);
    }
  }
  parts.reg_text = text_reg_loss(t_ori, t_rep, want ? &gt : nullptr);
  if (want) axpy(w.lambda2, gt, dt);
  if (cfg.loss_kl) {
    parts.kl_visual = visual_kl_loss(v_rep, ctx.tokens, want ? &gv : nullptr);
    if (want) axpy(w.lambda3, gv, dv);
  }
  if (cfg.loss_local) parts.local = ctx.local;

  ItemResult result;
  result.loss = total_loss(parts, w);
  result.logits = class_cosines(v_rep, t_rep, n_classes);
  if (!want) return result;

  const std::size_t d = text.cols();
  for (std::size_t i = 0; i < passes.size(); ++i) {
    const TierPass& p = passes[i];
    // Visual side: theta is frozen, so only its input gradient is needed.
    Matrix dseq(n_proto + p.tier_tokens.rows(), d);
    for (std::size_t r = 0; r < n_proto; ++r) {
      std::copy(dv.row(i * n_proto + r).begin(), dv.row(i * n_proto + r).end(),
                dseq.row(r).begin());
    }
    const BlockGrads gtheta = transformer_block_backward(p.theta_cache, theta, dseq, nullptr);
    Matrix dfused(n_proto, d);
    for (std::size_t r = 0; r < n_proto; ++r) {
      for (std::size_t c = 0; c < d; ++c) dfused(r, c) = gtheta.dq(r, c) + gtheta.dkv(r, c);
    }
    transformer_block_backward(p.irm_cache, params.irm_for_tier(p.tier), dfused,
                               &grads->irm_for_tier(p.tier));

    // Text side: out = text + alpha * (input W + b).
    Matrix dlin = slice_rows(dt, i * n_classes, (i + 1) * n_classes);
    for (double& x : dlin.values()) x *= params.alpha;
    add_matmul_at(p.trm_input, dlin, grads->trm_weight);
    add_column_sums(dlin, grads->trm_bias);
  }
  return result;
}

}  // namespace spot

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/gradient_suite.hpp"

#include <algorithm>

#include "spotlighter/error.hpp"
#include "spotlighter/grad_check.hpp"
#include "spotlighter/model.hpp"
#include "spotlighter/rng.hpp"

namespace spot {

namespace {

Vector flatten(const FusionParams& p) {
  Vector out;
  for (const auto& t : p.tensors()) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

void unflatten(std::span<const double> flat, FusionParams& p) {
  std::size_t off = 0;
  for (auto& t : p.tensors()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(off), t.data.size(), t.data.begin());
    off += t.data.size();
  }
}

}  // namespace

GradientSuiteReport run_gradient_suite(const RunConfig& base, const GradientSuiteOptions& opt) {
  if (base.width > kMaxGradCheckWidth) {
    throw Error(ErrorCode::Config, "gradient check needs width <= " +
                                       std::to_string(kMaxGradCheckWidth));
  }
  if (opt.n_tok < 2 || opt.n_classes < 2) throw Error(ErrorCode::Config, "instance too small");
  RunConfig cfg = base;
  cfg.k_act = opt.n_tok / 2;
  cfg.validate();
  const std::size_t d = cfg.width;

  GradientSuiteReport report;
  report.seeds = opt.seeds;
  for (std::size_t s = 0; s < opt.seeds; ++s) {
    const std::uint64_t seed = opt.first_seed + s;
    Rng rng(seed);
    Matrix text(opt.n_classes, d);
    for (std::size_t c = 0; c < opt.n_classes; ++c) {
      const Vector u = rng.unit_vector(d);
      std::copy(u.begin(), u.end(), text.row(c).begin());
    }
    Matrix tokens(opt.n_tok, d);
    for (double& x : tokens.values()) x = rng.gaussian();
    const std::size_t label = rng.below(opt.n_classes);
    MemoryBank bank = init_bank(text, cfg.n_proto, InitMode::TextSeeded, 0.5,
                                derive_seed(seed, 1), cfg.beta);
    const ItemContext ctx = prepare_training_item(tokens, label, text, bank, cfg);

    FusionParams params = FusionParams::initial(d, cfg.heads, cfg.hidden(), cfg.shared_irm,
                                                cfg.alpha, opt.param_std, rng);
    for (auto& t : params.tensors()) {
      for (double& x : t.data) x += opt.param_std * rng.gaussian();
    }
    const TransformerBlockParams theta =
        TransformerBlockParams::random(d, cfg.heads, cfg.hidden(), opt.param_std, false, rng);

    FusionParams grads = params.zeros_like();
    item_loss(ctx, label, text, params, theta, cfg, &grads);
    Vector analytic = flatten(grads);
    if (opt.corrupt_gradient) analytic[0] += 1.0;

    FusionParams probe = params;
    const ScalarFn f = [&](std::span<const double> x) {
      unflatten(x, probe);
      return item_loss(ctx, label, text, probe, theta, cfg).loss.total;
    };
    const Vector flat = flatten(params);
    const GradCheckResult r = grad_check(f, flat, analytic, opt.eps);
    report.parameters = flat.size();

    std::size_t off = 0;
    std::size_t ti = 0;
    for (const auto& t : params.tensors()) {
      if (report.per_tensor.size() <= ti) report.per_tensor.push_back({t.name, 0.0});
      const auto first = r.rel_errors.begin() + static_cast<std::ptrdiff_t>(off);
      const double worst =
          *std::max_element(first, first + static_cast<std::ptrdiff_t>(t.data.size()));
      auto& entry = report.per_tensor[ti];
      entry.max_rel_error = std::max(entry.max_rel_error, worst);
      if (worst > report.max_rel_error) {
        report.max_rel_error = worst;
        report.worst_seed = seed;
        report.worst_tensor = t.name;
      }
      off += t.data.size();
      ++ti;
    }
  }
  return report;
}

}  // namespace spot

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "spotlighter/ablation.hpp"
#include "spotlighter/bench.hpp"
#include "spotlighter/checkpoint.hpp"
#include "spotlighter/error.hpp"
#include "spotlighter/gradient_suite.hpp"
#include "spotlighter/pipeline.hpp"

using namespace spot;

namespace {

SynthSpec toy_spec() {
  SynthSpec s;
  s.n_classes = 3;
  s.n_tok = 8;
  s.width = 8;
  s.signal_tokens = 3;
  s.noise_sigma = 0.2;
  s.seed = 11;
  return s;
}

RunConfig toy_config() {
  RunConfig c;
  c.width = 8;
  c.heads = 2;
  c.k_act = 4;
  c.n_proto = 2;
  c.epochs = 2;
  return c;
}

ErrorCode error_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

/// Inference path composed from the loop oracles only.
oracle::Vec oracle_probabilities(const Matrix& raw, const TrainedState& s, const Matrix& text_m,
                                 const MemoryBank& bank) {
  const RunConfig& cfg = s.config;
  oracle::Mat tok;
  for (const auto& row : oracle::to_mat(raw)) tok.push_back(oracle::unit(row));
  const oracle::Mat text = oracle::to_mat(text_m);
  std::vector<oracle::Mat> banks;
  for (const auto& p : bank.prototypes) banks.push_back(oracle::to_mat(p));

  const std::size_t cls = oracle::match_class(oracle::unit(oracle::mean_rows(oracle::to_mat(raw))),
                                              banks);
  const oracle::Mat& protos = banks[cls];
  oracle::Vec combined, semantic;
  for (const auto& t : tok) {
    double best = -2;
    for (const auto& u : protos) best = std::max(best, oracle::cosine(t, u));
    semantic.push_back(best);
    combined.push_back(oracle::cosine(t, text[cls]) + best);
  }
  const auto sel = oracle::top_k(combined, cfg.k_act);
  oracle::Vec rank(tok.size(), -10.0);
  for (auto i : sel) rank[i] = semantic[i];
  const auto ranked = oracle::top_k(rank, sel.size());
  const std::size_t n1 = (sel.size() + 1) / 2;

  oracle::Mat vis, txt;
  for (int tier = 0; tier < 2; ++tier) {
    oracle::Mat tt;
    for (std::size_t j = tier == 0 ? 0 : n1; j < (tier == 0 ? n1 : ranked.size()); ++j) {
      tt.push_back(tok[ranked[j]]);
    }
    if (tt.empty()) continue;
    oracle::Mat seq = oracle::block(protos, tt, s.params.irm_for_tier(tier));
    seq.insert(seq.end(), tt.begin(), tt.end());
    const auto out = oracle::block(seq, seq, s.theta);
    vis.insert(vis.end(), out.begin(), out.begin() + static_cast<std::ptrdiff_t>(protos.size()));
    const auto tr = oracle::trm(text, tt, s.params.trm_weight, s.params.trm_bias, s.params.alpha,
                                cfg.tau);
    txt.insert(txt.end(), tr.begin(), tr.end());
  }
  const oracle::Vec v = oracle::mean_rows(vis);
  oracle::Vec logits;
  for (std::size_t c = 0; c < text.size(); ++c) {
    oracle::Mat rows;
    for (std::size_t r = c; r < txt.size(); r += text.size()) rows.push_back(txt[r]);
    logits.push_back(oracle::cosine(v, oracle::mean_rows(rows)));
  }
  return oracle::softmax(logits, cfg.tau);
}

}  // namespace

TEST_CASE("harmonic_mean") {
  CHECK(std::abs(harmonic_mean(77.62, 71.71) - 74.55) <= 0.01);
  CHECK(std::abs(harmonic_mean(69.34, 74.22) - 71.70) <= 0.01);
  CHECK(harmonic_mean(100.0, 0.0) == 0.0);
  CHECK(harmonic_mean(0.0, 0.0) == 0.0);
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const double b = 100 * rng.uniform(), n = 100 * rng.uniform();
    const double h = harmonic_mean(b, n);
    CHECK(h <= (b + n) / 2 + 1e-12);
    CHECK(h >= std::min(b, n) - 1e-12);
    CHECK(h <= std::max(b, n) + 1e-12);
    CHECK(std::abs(harmonic_mean(b, b) - b) < 1e-12);
  }
}

TEST_CASE("training") {
  const Episode ep = generate_episode(toy_spec(), 4, 5);
  RunConfig cfg = toy_config();

  SUBCASE("zero epochs leaves the initial state") {
    cfg.epochs = 0;
    const TrainedState s = train(cfg, ep.base_train);
    CHECK(s.history.empty());
    const TrainedState init = init_state(cfg, ep.base_train.text_embeddings);
    CHECK(s == init);
  }
  SUBCASE("history, frozen theta and determinism") {
    const TrainedState init = init_state(cfg, ep.base_train.text_embeddings);
    const FeatureSet before = ep.base_train;
    std::size_t calls = 0;
    const TrainedState s = train(cfg, ep.base_train, [&](std::size_t e, const EpochRecord&) {
      CHECK(e == calls);
      ++calls;
    });
    CHECK(calls == 2);
    CHECK(s.history.size() == 2);
    CHECK(s.theta == init.theta);
    CHECK_FALSE(s.params == init.params);
    CHECK(ep.base_train == before);
    CHECK(train(cfg, ep.base_train) == s);
    for (const auto& t : s.params.tensors()) {
      for (double v : t.data) CHECK(static_cast<double>(static_cast<float>(v)) == v);
    }
    for (const auto& h : s.history) {
      const LossBreakdown again = total_loss(h.loss, cfg.loss_weights());
      CHECK(std::abs(again.total - h.loss.total) < 1e-9);
    }
  }
  SUBCASE("zero loss weights leave only the classification term") {
    cfg.lambda1 = cfg.lambda2 = cfg.lambda3 = 0.0;
    for (const auto& h : train(cfg, ep.base_train).history) CHECK(h.loss.total == h.loss.cls);
  }
  SUBCASE("loss toggles zero their terms") {
    cfg.loss_low = cfg.loss_high = cfg.loss_kl = cfg.loss_local = false;
    for (const auto& h : train(cfg, ep.base_train).history) {
      CHECK(h.loss.cls_low == 0.0);
      CHECK(h.loss.cls_high == 0.0);
      CHECK(h.loss.kl_visual == 0.0);
      CHECK(h.loss.local == 0.0);
    }
  }
  SUBCASE("momentum runs") {
    cfg.momentum = 0.9;
    CHECK(train(cfg, ep.base_train).history.size() == 2);
  }
  SUBCASE("shape errors") {
    cfg.width = 16;
    CHECK(error_of([&] { train(cfg, ep.base_train); }) == ErrorCode::DimMismatch);
    FeatureSet empty = ep.base_train;
    empty.items.clear();
    empty.labels.clear();
    CHECK(error_of([&] { train(toy_config(), empty); }) == ErrorCode::EmptySplit);
    cfg = toy_config();
    cfg.k_act = 9;
    CHECK(error_of([&] { train(cfg, ep.base_train); }) == ErrorCode::KOutOfRange);
  }
}

TEST_CASE("prediction") {
  const Episode ep = generate_episode(toy_spec(), 4, 5);
  const TrainedState s = train(toy_config(), ep.base_train);
  for (const FeatureSet* set : {&ep.base_test, &ep.novel_test}) {
    const MemoryBank bank = bank_for(s, *set);
    for (std::size_t i = 0; i < 5; ++i) {
      const Prediction p = predict(set->items[i], s, set->text_embeddings, bank);
      double sum = 0;
      for (double v : p.probabilities) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-9);
      const auto ref = oracle_probabilities(set->items[i], s, set->text_embeddings, bank);
      for (std::size_t c = 0; c < ref.size(); ++c) CHECK(std::abs(p.probabilities[c] - ref[c]) < 1e-7);
      CHECK(p.label == oracle::top_k(ref, 1)[0]);
    }
  }
  CHECK(bank_for(s, ep.base_test) == s.bank);
  CHECK_FALSE(bank_for(s, ep.novel_test) == s.bank);
}

TEST_CASE("noise-free items are classified by construction") {
  auto spec = toy_spec();
  spec.noise_sigma = 0.0;
  spec.signal_tokens = spec.n_tok;
  const Episode ep = generate_episode(spec, 2, 3);
  RunConfig cfg = toy_config();
  cfg.init_sigma = 0.0;
  cfg.epochs = 0;
  const TrainedState s = train(cfg, ep.base_train);
  const SplitMetrics m = evaluate_split(s, ep.novel_test);
  CHECK(m.accuracy == 100.0);
  const Metrics all = evaluate(s, ep.base_test, ep.novel_test);
  CHECK(all.base == 100.0);
  CHECK(all.hm == 100.0);
}

TEST_CASE("evaluation tallies") {
  const Episode ep = generate_episode(toy_spec(), 4, 4);
  const TrainedState s = train(toy_config(), ep.base_train);
  FeatureSet set = ep.novel_test;
  set.items.resize(10);
  set.labels.resize(10);
  const MemoryBank bank = bank_for(s, set);
  std::vector<std::size_t> hit(3, 0), cnt(3, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const std::size_t pred = predict(set.items[i], s, set.text_embeddings, bank).label;
    ++cnt[set.labels[i]];
    if (pred == set.labels[i]) {
      ++hit[set.labels[i]];
      ++correct;
    }
  }
  const SplitMetrics m = evaluate_split(s, set);
  CHECK(m.total == 10);
  CHECK(m.correct == correct);
  CHECK(m.accuracy == doctest::Approx(10.0 * static_cast<double>(correct)));
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(m.per_class[c] == doctest::Approx(cnt[c] ? 100.0 * hit[c] / cnt[c] : 0.0));
  }
  FeatureSet none = set;
  none.items.clear();
  none.labels.clear();
  CHECK(error_of([&] { evaluate(s, ep.base_test, none); }) == ErrorCode::EmptySplit);
}

TEST_CASE("checkpoints") {
  const Episode ep = generate_episode(toy_spec(), 4, 5);
  RunConfig cfg = toy_config();
  cfg.shared_irm = true;
  cfg.tier_mode = TierMode::Lev1;
  const TrainedState s = train(cfg, ep.base_train);
  const auto bytes = encode_state(s);
  const TrainedState back = decode_state(bytes);
  CHECK(back == s);
  CHECK(encode_state(back) == bytes);

  const auto dir = std::filesystem::temp_directory_path() / "spot_ckpt_test";
  std::filesystem::create_directories(dir);
  save_state(s, dir / "m.ckpt");
  const TrainedState loaded = load_state(dir / "m.ckpt");
  std::filesystem::remove_all(dir);
  for (std::size_t i = 0; i < 15; ++i) {
    const FeatureSet& set = i < 10 ? ep.base_test : ep.novel_test;
    const Prediction a = predict(set.items[i % set.size()], s, set.text_embeddings, bank_for(s, set));
    const Prediction b =
        predict(set.items[i % set.size()], loaded, set.text_embeddings, bank_for(loaded, set));
    CHECK(a.probabilities == b.probabilities);
  }

  auto bad = bytes;
  bad[0] = 'X';
  CHECK(error_of([&] { decode_state(bad); }) == ErrorCode::BadMagic);
  bad = bytes;
  bad[8] = 2;
  CHECK(error_of([&] { decode_state(bad); }) == ErrorCode::VersionMismatch);
  CHECK(error_of([&] { decode_state({bytes.begin(), bytes.end() - 7}); }) ==
        ErrorCode::TruncatedFile);
  CHECK(error_of([&] { decode_state({bytes.begin(), bytes.begin() + 5}); }) ==
        ErrorCode::TruncatedFile);
  bad = bytes;
  bad.push_back(0);
  CHECK(error_of([&] { decode_state(bad); }) == ErrorCode::HeaderMismatch);
}

TEST_CASE("sgd_step") {
  auto p = FusionParams::zeros(4, 2, 8, true, 0.2);
  auto g = p.zeros_like();
  g.trm_bias[1] = 2.0;
  sgd_step(p, g, 0.5, 0.0, nullptr);
  CHECK(p.trm_bias[1] == -1.0);
  CHECK(p.irm[0].ln1_gamma[0] == 1.0);
  auto v = p.zeros_like();
  sgd_step(p, g, 0.5, 0.5, &v);
  sgd_step(p, g, 0.5, 0.5, &v);
  // velocity 2 then 3: -1 - 1 - 1.5
  CHECK(p.trm_bias[1] == -3.5);
  CHECK_THROWS_AS(sgd_step(p, g, 0.5, 0.5, nullptr), Error);
}

TEST_CASE("parameter accounting at the default width") {
  RunConfig cfg;
  const FusionParams p = FusionParams::zeros(cfg.width, cfg.heads, cfg.hidden(), false, cfg.alpha);
  std::size_t enumerated = 0;
  for (const auto& t : p.tensors()) {
    std::size_t prod = 1;
    for (auto s : t.shape) prod *= s;
    enumerated += prod;
  }
  const std::size_t d = 64, h = 128;
  const std::size_t block = 4 * (d * d + d) + 4 * d + 2 * d * h + h + d;
  CHECK(enumerated == 2 * block + 2 * d * d + d);
  CHECK(enumerated == FusionParams::parameter_count(d, h, false));
}

TEST_CASE("benchmark harness") {
  CHECK(error_of([] {
          const Episode ep = generate_episode(toy_spec(), 2, 5);
          const TrainedState s = train(toy_config(), ep.base_train);
          bench_throughput(s, ep.base_test, {2, 4});
        }) == ErrorCode::WorkloadTooSmall);

  const Episode ep = generate_episode(toy_spec(), 2, 34);
  const TrainedState s = train(toy_config(), ep.base_train);
  CHECK(error_of([&] { bench_throughput(s, ep.base_test, {2}, 4); }) == ErrorCode::Config);
  CHECK(error_of([&] { bench_throughput(s, ep.base_test, {9}); }) == ErrorCode::KOutOfRange);
  const ThroughputReport r = bench_throughput(s, ep.base_test, {2, 4}, 5, 1);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[2].full_reference);
  CHECK(r.rows[2].k == 8);
  for (const auto& row : r.rows) {
    CHECK(row.items_per_sec > 0.0);
    CHECK(row.rep_seconds.size() == 5);
    CHECK(row.min_items_per_sec <= row.items_per_sec);
    CHECK(row.items_per_sec <= row.max_items_per_sec);
  }
  CHECK(r.trainable_param_count == r.analytic_param_count);
  const std::string csv = bench_csv(r);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  for (bool semantic : {true, false}) {
    double prev = 0;
    for (std::size_t k = 1; k <= 32; ++k) {
      const double f = inference_flops(32, k, 64, 5, 10, 128, semantic);
      CHECK(f > prev);
      prev = f;
    }
  }
}

TEST_CASE("ablation grid") {
  const auto grid = ablation_grid();
  CHECK(grid.size() == 72);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(grid[i].index == i);
    CHECK(grid[i].tier == static_cast<TierMode>(i % 3));
  }
  CHECK(grid[0].semantic_on);
  CHECK_FALSE(grid[71].semantic_on);
  CHECK(grid[71].variant == SelectionVariant::RemoveTopK);
  const std::string header = ablation_csv_header();
  CHECK(header == "cell,semantic,init,recalc,variant,tier,base,novel,hm,items_per_sec,status,error");

  AblationRow row;
  row.cell = grid[4];
  row.ok = false;
  row.error = "boom, with comma";
  const std::string line = ablation_csv_row(row);
  CHECK(std::count(line.begin(), line.end(), ',') == 11);
  CHECK(line.rfind(",error,boom; with comma") != std::string::npos);
}

TEST_CASE("gradient suite on a few seeds") {
  RunConfig cfg;
  cfg.width = 8;
  cfg.heads = 2;
  cfg.n_proto = 2;
  GradientSuiteOptions opt;
  opt.seeds = 3;
  const GradientSuiteReport r = run_gradient_suite(cfg, opt);
  CHECK(r.seeds == 3);
  CHECK(r.max_rel_error < 1e-4);
  CHECK(r.parameters == FusionParams::parameter_count(8, 16, false));
  CHECK_FALSE(r.per_tensor.empty());

  opt.corrupt_gradient = true;
  opt.seeds = 1;
  CHECK(run_gradient_suite(cfg, opt).max_rel_error > 1e-4);

  cfg.width = 32;
  CHECK(error_of([&] { run_gradient_suite(cfg, opt); }) == ErrorCode::Config);
}

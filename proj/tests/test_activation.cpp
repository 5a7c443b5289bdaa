// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "spotlighter/activation.hpp"
#include "spotlighter/error.hpp"
#include "spotlighter/rng.hpp"

using namespace spot;

using Idx = std::vector<std::size_t>;

TEST_CASE("sample_scores") {
  const Matrix tok = Matrix::from_rows({{2, 0}, {0, 3}, {1, 1}});
  const Vector s = sample_scores(tok, Vector{1.0, 0.0});
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 0.0);
  CHECK(std::abs(s[2] - std::sqrt(0.5)) < 1e-15);
  CHECK_THROWS_AS(sample_scores(Matrix::from_rows({{0, 0}}), Vector{1.0, 0.0}), Error);

  Rng rng(1);
  const auto t = oracle::random_mat(rng, 32, 10);
  const Vector text = rng.gaussian_vector(10);
  const Vector got = sample_scores(oracle::from_mat(t), text);
  for (std::size_t i = 0; i < 32; ++i) CHECK(std::abs(got[i] - oracle::cosine(t[i], text)) < 1e-10);
}

TEST_CASE("semantic_scores") {
  Rng rng(2);
  const auto protos = oracle::random_mat(rng, 5, 6);
  const auto tok = oracle::random_mat(rng, 16, 6);
  const Vector s = semantic_scores(oracle::from_mat(tok), oracle::from_mat(protos));
  for (std::size_t i = 0; i < 16; ++i) {
    double best = -2;
    for (const auto& u : protos) best = std::max(best, oracle::cosine(tok[i], u));
    CHECK(std::abs(s[i] - best) < 1e-10);
  }
  const Vector one = semantic_scores(oracle::from_mat(tok), oracle::from_mat({protos[3]}));
  for (std::size_t i = 0; i < 16; ++i) CHECK(std::abs(one[i] - oracle::cosine(tok[i], protos[3])) < 1e-12);
  const Vector same = semantic_scores(oracle::from_mat({protos[1]}), oracle::from_mat(protos));
  CHECK(std::abs(same[0] - 1.0) < 1e-12);
}

TEST_CASE("select_activated") {
  CHECK(select_activated(Vector{0.9, 0.1, 0.5}, 2, SelectionVariant::TopK) == Idx{0, 2});
  CHECK(select_activated(Vector{0.9, 0.1, 0.5}, 2, SelectionVariant::BottomK) == Idx{1, 2});
  CHECK(select_activated(Vector{0.9, 0.1, 0.5}, 1, SelectionVariant::RemoveTopK) == Idx{2, 1});
  CHECK(select_activated(Vector{0.9, 0.1, 0.5}, 3, SelectionVariant::TopK) == Idx{0, 2, 1});
  CHECK(select_activated(Vector{0.5, 0.5, 0.5}, 2, SelectionVariant::TopK) == Idx{0, 1});
  CHECK(selected_count(32, 8, SelectionVariant::RemoveTopK) == 24);
  CHECK(selected_count(32, 8, SelectionVariant::BottomK) == 8);

  for (std::size_t k : {0u, 4u}) {
    try {
      select_activated(Vector{1, 2, 3}, k, SelectionVariant::TopK);
      FAIL("accepted k out of range");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::KOutOfRange);
    }
  }

  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.below(40);
    const std::size_t k = 1 + rng.below(n);
    Vector s(n);
    // Coarse values force ties.
    for (double& v : s) v = std::round(rng.gaussian() * 4.0) / 4.0;
    CHECK(select_activated(s, k, SelectionVariant::TopK) == oracle::top_k(s, k));
    CHECK(select_activated(s, k, SelectionVariant::BottomK) == oracle::bottom_k(s, k));
    CHECK(select_activated(s, k, SelectionVariant::RemoveTopK) == oracle::remove_top_k(s, k));

    Vector shifted = s;
    for (double& v : shifted) v += 0.75;
    CHECK(select_activated(shifted, k, SelectionVariant::TopK) ==
          select_activated(s, k, SelectionVariant::TopK));
  }
}

TEST_CASE("top-k is permutation equivariant") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const Vector s = rng.gaussian_vector(20);
    Idx perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = 19; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    Vector ps(20);
    for (std::size_t i = 0; i < 20; ++i) ps[i] = s[perm[i]];
    const Idx a = select_activated(s, 7, SelectionVariant::TopK);
    const Idx b = select_activated(ps, 7, SelectionVariant::TopK);
    for (std::size_t i = 0; i < 7; ++i) CHECK(perm[b[i]] == a[i]);
  }
}

TEST_CASE("score_and_select combines by plain sum") {
  Rng rng(5);
  const Matrix tok = oracle::from_mat(oracle::random_mat(rng, 12, 6));
  const Matrix protos = oracle::from_mat(oracle::random_mat(rng, 3, 6));
  const Vector text = rng.gaussian_vector(6);
  const auto on = score_and_select(tok, text, protos, 5, SelectionVariant::TopK, true);
  for (std::size_t i = 0; i < 12; ++i) CHECK(on.combined[i] == on.sample[i] + on.semantic[i]);
  CHECK(on.selected == oracle::top_k(oracle::to_vec(on.combined), 5));
  const auto off = score_and_select(tok, text, protos, 5, SelectionVariant::TopK, false);
  CHECK(off.combined == off.sample);
  CHECK(off.selected == oracle::top_k(oracle::to_vec(off.sample), 5));
}

TEST_CASE("stratify") {
  const Matrix protos = Matrix::from_rows({{1, 0}});
  const Matrix tok = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}, {1, -2}});

  SUBCASE("single token") {
    const Idx sel{2};
    const Tiers t = stratify(tok, sel, Vector{0, 0, 0, 0}, protos, false);
    CHECK(t.tier1 == Idx{2});
    CHECK(t.tier2.empty());
  }
  SUBCASE("recalc off splits by the given scores") {
    const Idx sel{0, 1, 2, 3};
    const Tiers t = stratify(tok, sel, Vector{0.1, 0.9, 0.4, 0.6}, protos, false);
    CHECK(t.tier1 == Idx{1, 3});
    CHECK(t.tier2 == Idx{2, 0});
  }
  SUBCASE("recalc on follows the prototype ranking") {
    const Idx sel{0, 1, 2, 3};
    const Tiers t = stratify(tok, sel, Vector{0.1, 0.9, 0.4, 0.6}, protos, true);
    CHECK(t.tier1 == Idx{0, 2});
    CHECK(t.tier2 == Idx{3, 1});
    // Rotating the prototype inverts the ranking.
    const Tiers r = stratify(tok, sel, Vector{}, Matrix::from_rows({{-1, 0}}), true);
    CHECK(r.tier1 == Idx{1, 3});
  }
  SUBCASE("empty") {
    try {
      stratify(tok, Idx{}, Vector{}, protos, true);
      FAIL("accepted an empty selection");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptySelection);
    }
  }
  SUBCASE("random instances against recompute-then-sort") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
      const auto tk = oracle::random_mat(rng, 20, 5), pr = oracle::random_mat(rng, 3, 5);
      const std::size_t k = 1 + rng.below(20);
      const Idx sel = oracle::top_k(oracle::to_vec(rng.gaussian_vector(20)), k);
      const Tiers t = stratify(oracle::from_mat(tk), sel, Vector{}, oracle::from_mat(pr), true);
      oracle::Vec full(20, -10.0);
      for (std::size_t i : sel) {
        double best = -2;
        for (const auto& u : pr) best = std::max(best, oracle::cosine(tk[i], u));
        full[i] = best;
      }
      const Idx ranked = oracle::top_k(full, k);
      const std::size_t n1 = (k + 1) / 2;
      CHECK(t.tier1 == Idx(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n1)));
      CHECK(t.tier2 == Idx(ranked.begin() + static_cast<std::ptrdiff_t>(n1), ranked.end()));
      Idx all = t.tier1;
      all.insert(all.end(), t.tier2.begin(), t.tier2.end());
      Idx sorted_sel = sel;
      std::sort(all.begin(), all.end());
      std::sort(sorted_sel.begin(), sorted_sel.end());
      CHECK(all == sorted_sel);
    }
  }
}

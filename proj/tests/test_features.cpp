// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "oracles.hpp"
#include "spotlighter/error.hpp"
#include "spotlighter/features.hpp"

using namespace spot;

namespace {

SynthSpec small_spec() {
  SynthSpec s;
  s.n_classes = 4;
  s.n_tok = 12;
  s.width = 16;
  s.signal_tokens = 3;
  s.noise_sigma = 0.3;
  s.seed = 99;
  return s;
}

ErrorCode decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_features(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode accepted a broken file");
  return ErrorCode::Io;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
  const Episode a = generate_episode(small_spec(), 3, 5);
  const Episode b = generate_episode(small_spec(), 3, 5);
  CHECK(encode_features(a.base_train) == encode_features(b.base_train));
  CHECK(encode_features(a.novel_test) == encode_features(b.novel_test));
  auto other = small_spec();
  other.seed = 100;
  CHECK(encode_features(generate_episode(other, 3, 5).base_train) !=
        encode_features(a.base_train));
}

TEST_CASE("episode shapes and labels") {
  const Episode ep = generate_episode(small_spec(), 3, 5);
  CHECK(ep.base_train.size() == 12);
  CHECK(ep.base_test.size() == 20);
  CHECK(ep.novel_test.size() == 20);
  CHECK(ep.base_train.split == Split::Base);
  CHECK(ep.novel_test.split == Split::Novel);
  CHECK(ep.base_train.text_embeddings == ep.base_test.text_embeddings);
  CHECK(ep.base_train.text_embeddings != ep.novel_test.text_embeddings);
  for (auto l : ep.novel_test.labels) CHECK(l < 4);
  for (const auto& item : ep.base_train.items) {
    for (std::size_t r = 0; r < item.rows(); ++r) {
      CHECK(std::abs(norm(item.row(r)) - 1.0) < 1e-6);
      for (double v : item.row(r)) CHECK(static_cast<double>(static_cast<float>(v)) == v);
    }
  }
}

TEST_CASE("zero noise with all-signal tokens reproduces the text direction") {
  auto s = small_spec();
  s.noise_sigma = 0.0;
  s.signal_tokens = s.n_tok;
  const Episode ep = generate_episode(s, 2, 2);
  for (const FeatureSet* fs : {&ep.base_train, &ep.novel_test}) {
    for (std::size_t i = 0; i < fs->size(); ++i) {
      const auto text = oracle::to_vec(fs->text_embeddings.row(fs->labels[i]));
      for (std::size_t r = 0; r < fs->n_tok; ++r) {
        CHECK(std::abs(oracle::cosine(oracle::to_vec(fs->items[i].row(r)), text) - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("signal tokens sit closer to their text embedding than distractors") {
  SynthSpec s;
  s.n_classes = 10;
  s.n_tok = 32;
  s.width = 64;
  s.signal_tokens = 4;
  s.noise_sigma = 0.3;
  const Episode ep = generate_episode(s, 16, 1);
  // Signal tokens are identified by their cosine ranking: per item the top
  // signal_tokens cosines, against everything else.
  double sig = 0, dis = 0;
  std::size_t ns = 0, nd = 0;
  for (std::size_t i = 0; i < ep.base_train.size(); ++i) {
    const auto text = oracle::to_vec(ep.base_train.text_embeddings.row(ep.base_train.labels[i]));
    oracle::Vec c;
    for (std::size_t r = 0; r < s.n_tok; ++r) {
      c.push_back(oracle::cosine(oracle::to_vec(ep.base_train.items[i].row(r)), text));
    }
    const auto order = oracle::top_k(c, s.n_tok);
    for (std::size_t j = 0; j < s.n_tok; ++j) {
      if (j < s.signal_tokens) {
        sig += c[order[j]];
        ++ns;
      } else {
        dis += c[order[j]];
        ++nd;
      }
    }
  }
  CHECK(sig / ns > dis / nd + 0.5);
}

TEST_CASE("invalid specs are rejected") {
  auto s = small_spec();
  s.noise_sigma = -1.0;
  CHECK_THROWS_AS(generate_episode(s, 1, 1), Error);
  s = small_spec();
  s.signal_tokens = s.n_tok + 1;
  CHECK_THROWS_AS(s.validate(), Error);
  s = small_spec();
  s.width = 1;
  CHECK_THROWS_AS(s.validate(), Error);
  try {
    generate_episode(small_spec(), 0, 1);
    FAIL("zero shots accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidSpec);
  }
}

TEST_CASE("feature files round trip") {
  const Episode ep = generate_episode(small_spec(), 2, 3);
  const auto bytes = encode_features(ep.base_test);
  CHECK(decode_features(bytes) == ep.base_test);
  CHECK(encode_features(decode_features(bytes)) == bytes);

  const auto dir = std::filesystem::temp_directory_path() / "spot_features_test";
  std::filesystem::create_directories(dir);
  write_features(ep.novel_test, dir / "n.spot");
  CHECK(read_features(dir / "n.spot") == ep.novel_test);
  std::filesystem::remove_all(dir);

  FeatureSet unlabeled = ep.base_test;
  unlabeled.has_labels = false;
  unlabeled.labels.clear();
  CHECK(decode_features(encode_features(unlabeled)) == unlabeled);
}

TEST_CASE("broken feature files") {
  const Episode ep = generate_episode(small_spec(), 2, 3);
  const auto good = encode_features(ep.base_train);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  CHECK(decode_error(bad_magic) == ErrorCode::BadMagic);

  auto bad_version = good;
  bad_version[4] = 0x02;
  CHECK(decode_error(bad_version) == ErrorCode::VersionMismatch);

  CHECK(decode_error({good.begin(), good.begin() + 3}) == ErrorCode::TruncatedFile);
  CHECK(decode_error({good.begin(), good.begin() + 12}) == ErrorCode::TruncatedFile);

  // Drop one item's tokens and label while the header still declares the old
  // count.
  FeatureSet fewer = ep.base_train;
  fewer.items.pop_back();
  fewer.labels.pop_back();
  const auto fewer_bytes = encode_features(fewer);
  auto lying = encode_features(ep.base_train);
  lying.resize(fewer_bytes.size());
  CHECK(decode_error(lying) == ErrorCode::HeaderMismatch);

  auto extra = good;
  extra.push_back(0);
  CHECK(decode_error(extra) == ErrorCode::HeaderMismatch);
}

TEST_CASE("validate catches broken invariants") {
  FeatureSet fs = generate_episode(small_spec(), 1, 1).base_train;
  fs.labels[0] = 99;
  CHECK_THROWS_AS(fs.validate(), Error);
  fs = generate_episode(small_spec(), 1, 1).base_train;
  fs.items[0](0, 0) = 0.0;
  for (double& v : fs.items[0].row(0)) v = 0.0;
  CHECK_THROWS_AS(fs.validate(), Error);
}

// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spotlighter/numerics.hpp"

namespace spot {

enum class Split { Base, Novel };

std::string to_string(Split s);
Split parse_split(const std::string& s);

/// Frozen-encoder output for one split: per-item visual token grids, one text
/// embedding per category, and (optionally) labels.
struct FeatureSet {
  std::size_t n_tok = 0;
  std::size_t width = 0;
  Split split = Split::Base;
  bool has_labels = true;
  std::vector<Matrix> items;           // each n_tok x width
  std::vector<std::uint32_t> labels;   // empty when !has_labels
  Matrix text_embeddings;              // n_classes x width
  std::string provenance;

  std::size_t size() const { return items.size(); }
  std::size_t n_classes() const { return text_embeddings.rows(); }

  /// Throws DimMismatch / LabelOutOfRange / ZeroVector on a broken invariant.
  void validate() const;

  bool operator==(const FeatureSet&) const = default;
};

/// Surrogate encoder description. Noise is isotropic with expected squared
/// norm noise_sigma^2, so sigma is measured relative to the unit signal.
struct SynthSpec {
  std::size_t n_classes = 10;
  std::size_t n_tok = 32;
  std::size_t width = 64;
  std::size_t signal_tokens = 4;
  double noise_sigma = 0.3;
  std::size_t distractor_pool = 4096;  // shared background directions
  std::uint64_t seed = 7;

  void validate() const;
};

/// Base classes are 0..C-1 of the generated 2C; novel classes are C..2C-1
/// relabelled to 0..C-1 with their own text embeddings.
struct Episode {
  FeatureSet base_train;
  FeatureSet base_test;
  FeatureSet novel_test;
};

Episode generate_episode(const SynthSpec& spec, std::size_t shots, std::size_t test_per_class);

/// Binary feature file: "SPOT" 0x01, u32 LE header length, JSON header, then
/// u32 labels, visual tokens and text embeddings as LE binary32, row-major.
void write_features(const FeatureSet& fs, const std::filesystem::path& path);
FeatureSet read_features(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_features(const FeatureSet& fs);
FeatureSet decode_features(const std::vector<std::uint8_t>& bytes);

}  // namespace spot

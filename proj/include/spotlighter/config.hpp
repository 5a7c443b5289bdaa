// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "spotlighter/activation.hpp"
#include "spotlighter/memory_bank.hpp"
#include "spotlighter/objectives.hpp"
#include "spotlighter/representative.hpp"

namespace spot {

struct RunConfig {
  std::size_t k_act = 16;
  std::size_t n_proto = 5;
  std::size_t width = 64;
  double alpha = 0.2;
  double beta = 0.8;
  double tau = 0.01;
  double assign_temperature = 0.01;
  double lambda1 = 0.02;
  double lambda2 = 20.0;
  double lambda3 = 0.1;
  std::size_t heads = 4;
  std::size_t ffn_mult = 2;
  std::size_t epochs = 30;
  double lr = 0.01;
  double momentum = 0.0;
  std::uint64_t seed = 7;
  double init_std = 0.02;
  bool semantic_on = true;
  bool recalc_on = true;
  InitMode init_mode = InitMode::TextSeeded;
  double init_sigma = 0.1;
  SelectionVariant selection_variant = SelectionVariant::TopK;
  TierMode tier_mode = TierMode::Both;
  bool shared_irm = false;
  bool renormalize_protos = true;
  bool loss_low = true;
  bool loss_high = true;
  bool loss_kl = true;
  bool loss_local = true;

  LossWeights loss_weights() const { return {lambda1, lambda2, lambda3, tau}; }
  std::size_t hidden() const { return ffn_mult * width; }

  /// Throws Error(Config) on any out-of-range value.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Defaults, with the seed taken from SPOTLIGHTER_SEED when it is set.
RunConfig default_config();

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

/// Every tunable, in a stable order.
const std::vector<ConfigKey>& config_keys();

/// Sets one key from its text form; unknown keys and bad values throw Config.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);

/// Ordered key -> value text for every key (the serialized snapshot).
std::map<std::string, std::string> config_snapshot(const RunConfig& cfg);

/// key=value lines; '#' starts a comment. Applied on top of cfg.
void apply_config_text(RunConfig& cfg, const std::string& text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

std::string to_config_text(const RunConfig& cfg);

}  // namespace spot

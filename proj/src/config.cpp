// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include "spotlighter/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spotlighter/error.hpp"

namespace spot {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (v.empty() || res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::Config, key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(out)) {
    throw Error(ErrorCode::Config, key + ": expected a finite number, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw Error(ErrorCode::Config, key + ": expected true/false, got '" + v + "'");
}

std::string fmt_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <class T>
ConfigKey size_key(const char* name, const char* help, T RunConfig::*field) {
  return {name, help,
          [=](RunConfig& c, const std::string& v) {
            c.*field = static_cast<T>(parse_u64(name, v));
          },
          [=](const RunConfig& c) { return std::to_string(c.*field); }};
}

ConfigKey real_key(const char* name, const char* help, double RunConfig::*field) {
  return {name, help, [=](RunConfig& c, const std::string& v) { c.*field = parse_double(name, v); },
          [=](const RunConfig& c) { return fmt_double(c.*field); }};
}

ConfigKey bool_key(const char* name, const char* help, bool RunConfig::*field) {
  return {name, help, [=](RunConfig& c, const std::string& v) { c.*field = parse_bool(name, v); },
          [=](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

std::vector<ConfigKey> make_keys() {
  std::vector<ConfigKey> k;
  k.push_back(size_key("k_act", "activated tokens kept per item", &RunConfig::k_act));
  k.push_back(size_key("n_proto", "prototypes per category (K)", &RunConfig::n_proto));
  k.push_back(size_key("width", "token width d", &RunConfig::width));
  k.push_back(real_key("alpha", "text fusion coefficient in [0,1]", &RunConfig::alpha));
  k.push_back(real_key("beta", "prototype momentum in [0,1]", &RunConfig::beta));
  k.push_back(real_key("tau", "classification temperature", &RunConfig::tau));
  k.push_back(real_key("assign_temperature", "prototype assignment temperature",
                       &RunConfig::assign_temperature));
  k.push_back(real_key("lambda1", "weight of the graded losses", &RunConfig::lambda1));
  k.push_back(real_key("lambda2", "weight of the text regularizer", &RunConfig::lambda2));
  k.push_back(real_key("lambda3", "weight of the visual KL and local losses", &RunConfig::lambda3));
  k.push_back(size_key("heads", "attention heads in each fusion block", &RunConfig::heads));
  k.push_back(size_key("ffn_mult", "fusion block hidden width multiplier", &RunConfig::ffn_mult));
  k.push_back(size_key("epochs", "training epochs", &RunConfig::epochs));
  k.push_back(real_key("lr", "SGD learning rate", &RunConfig::lr));
  k.push_back(real_key("momentum", "SGD momentum (0 disables)", &RunConfig::momentum));
  k.push_back(size_key("seed", "random seed (default from SPOTLIGHTER_SEED, else 7)",
                       &RunConfig::seed));
  k.push_back(real_key("init_std", "std of random weight initialization", &RunConfig::init_std));
  k.push_back(bool_key("semantic_on", "add prototype scores to token scores",
                       &RunConfig::semantic_on));
  k.push_back(bool_key("recalc_on", "re-rank tiers against updated prototypes",
                       &RunConfig::recalc_on));
  k.push_back({"init_mode", "prototype initialization: text or random",
               [](RunConfig& c, const std::string& v) { c.init_mode = parse_init_mode(v); },
               [](const RunConfig& c) { return to_string(c.init_mode); }});
  k.push_back(real_key("init_sigma", "jitter of text-seeded prototypes", &RunConfig::init_sigma));
  k.push_back({"selection_variant", "top-k, bottom-k or remove-top-k",
               [](RunConfig& c, const std::string& v) {
                 c.selection_variant = parse_selection_variant(v);
               },
               [](const RunConfig& c) { return to_string(c.selection_variant); }});
  k.push_back({"tier_mode", "tiers used: both, lev1 or lev2",
               [](RunConfig& c, const std::string& v) { c.tier_mode = parse_tier_mode(v); },
               [](const RunConfig& c) { return to_string(c.tier_mode); }});
  k.push_back(bool_key("shared_irm", "one fusion block shared by both tiers",
                       &RunConfig::shared_irm));
  k.push_back(bool_key("renormalize_protos", "unit-normalize prototypes after each update",
                       &RunConfig::renormalize_protos));
  k.push_back(bool_key("loss_low", "include the tier-2 classification loss", &RunConfig::loss_low));
  k.push_back(bool_key("loss_high", "include the tier-1 classification loss",
                       &RunConfig::loss_high));
  k.push_back(bool_key("loss_kl", "include the visual KL loss", &RunConfig::loss_kl));
  k.push_back(bool_key("loss_local", "include the prototype local loss", &RunConfig::loss_local));
  return k;
}

}  // namespace

void RunConfig::validate() const {
  const auto fail = [](const std::string& m) { throw Error(ErrorCode::Config, m); };
  if (k_act == 0) fail("k_act must be at least 1");
  if (n_proto == 0) throw Error(ErrorCode::InvalidK, "n_proto must be at least 1");
  if (width == 0) fail("width must be positive");
  if (heads == 0 || width % heads != 0) fail("heads must divide width");
  if (ffn_mult == 0) fail("ffn_mult must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (!(assign_temperature > 0.0)) fail("assign_temperature must be positive");
  loss_weights().validate();
  if (!(lr > 0.0)) fail("lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum must lie in [0, 1)");
  if (!(init_std >= 0.0)) fail("init_std must be non-negative");
  if (!(init_sigma >= 0.0)) fail("init_sigma must be non-negative");
}

RunConfig default_config() {
  RunConfig cfg;
  if (const char* env = std::getenv("SPOTLIGHTER_SEED"); env && *env) {
    cfg.seed = parse_u64("SPOTLIGHTER_SEED", env);
  }
  return cfg;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(cfg, trim(value));
      return;
    }
  }
  throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
}

std::string get_config_value(const RunConfig& cfg, const std::string& key) {
  for (const auto& k : config_keys()) {
    if (k.name == key) return k.get(cfg);
  }
  throw Error(ErrorCode::Config, "unknown config key '" + key + "'");
}

std::map<std::string, std::string> config_snapshot(const RunConfig& cfg) {
  std::map<std::string, std::string> out;
  for (const auto& k : config_keys()) out[k.name] = k.get(cfg);
  return out;
}

void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::Config, "line " + std::to_string(lineno) + ": expected key=value");
    }
    set_config_value(cfg, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

std::string to_config_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : config_keys()) out += k.name + "=" + k.get(cfg) + "\n";
  return out;
}

}  // namespace spot

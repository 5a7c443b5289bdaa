// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: gen, train, eval, ablate, gradcheck, bench.
// Exit status: 0 success, 1 usage or config error, 2 data error, 3 numeric
// failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spotlighter/ablation.hpp"
#include "spotlighter/bench.hpp"
#include "spotlighter/checkpoint.hpp"
#include "spotlighter/config.hpp"
#include "spotlighter/error.hpp"
#include "spotlighter/features.hpp"
#include "spotlighter/gradient_suite.hpp"
#include "spotlighter/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumeric = 3;

const char* const kBaseTrain = "base_train.spot";
const char* const kBaseTest = "base_test.spot";
const char* const kNovelTest = "novel_test.spot";

double round2(double x) { return std::round(x * 100.0) / 100.0; }

/// Registers one option per config key ("--k-act" and "--k_act"); values
/// given on the command line are applied after any --config file.
class ConfigFlags {
 public:
  void attach(CLI::App* app, const spot::RunConfig& defaults) {
    app->add_option("--config", file_, "key=value config file (flags override it)");
    for (const auto& key : spot::config_keys()) {
      std::string dashed = key.name;
      for (char& c : dashed) {
        if (c == '_') c = '-';
      }
      std::string names = "--" + dashed;
      if (dashed != key.name) names += ",--" + key.name;
      auto* opt = app->add_option(names, values_[key.name], key.help);
      opt->default_str(key.get(defaults));
      options_[key.name] = opt;
    }
  }

  spot::RunConfig resolve(spot::RunConfig cfg) const {
    if (!file_.empty()) spot::apply_config_file(cfg, file_);
    for (const auto& key : spot::config_keys()) {
      const auto it = options_.find(key.name);
      if (it != options_.end() && it->second->count() > 0) {
        spot::set_config_value(cfg, key.name, values_.at(key.name));
      }
    }
    cfg.validate();
    return cfg;
  }

 private:
  std::string file_;
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> options_;
};

json loss_json(const spot::LossBreakdown& l) {
  return {{"cls", l.cls},           {"cls_low", l.cls_low},     {"cls_high", l.cls_high},
          {"reg_text", l.reg_text}, {"kl_visual", l.kl_visual}, {"local", l.local},
          {"total", l.total}};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw spot::Error(spot::ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::vector<double> round_all(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) out.push_back(round2(x));
  return out;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  spot::SynthSpec spec;
  std::size_t shots = 16;
  std::size_t test_per_class = 50;
  std::string out = "data";
};

int run_gen(const GenArgs& a) {
  const spot::Episode ep = spot::generate_episode(a.spec, a.shots, a.test_per_class);
  const fs::path dir(a.out);
  spot::write_features(ep.base_train, dir / kBaseTrain);
  spot::write_features(ep.base_test, dir / kBaseTest);
  spot::write_features(ep.novel_test, dir / kNovelTest);
  std::printf("wrote %s: base_train=%zu base_test=%zu novel_test=%zu items, %zu tokens x %zu, "
              "%zu classes per split, seed %llu\n",
              dir.string().c_str(), ep.base_train.size(), ep.base_test.size(),
              ep.novel_test.size(), a.spec.n_tok, a.spec.width, a.spec.n_classes,
              static_cast<unsigned long long>(a.spec.seed));
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  ConfigFlags flags;
  std::string data = "data";
  std::string train_file;
  std::string out = "model.ckpt";
  std::string report;
};

int run_train(const TrainArgs& a) {
  const spot::RunConfig cfg = a.flags.resolve(spot::default_config());
  const fs::path train_path = a.train_file.empty() ? fs::path(a.data) / kBaseTrain
                                                   : fs::path(a.train_file);
  const spot::FeatureSet train_set = spot::read_features(train_path);
  const spot::TrainedState state = spot::train(cfg, train_set, [&](std::size_t e, const auto& r) {
    std::fprintf(stderr, "epoch %3zu  loss %.6f  train_acc %.2f\n", e + 1, r.loss.total,
                 r.train_accuracy);
  });
  spot::save_state(state, a.out);
  const spot::SplitMetrics final_train = spot::evaluate_split(state, train_set);

  json history = json::array();
  for (std::size_t i = 0; i < state.history.size(); ++i) {
    history.push_back({{"epoch", i + 1},
                       {"loss", loss_json(state.history[i].loss)},
                       {"train_accuracy", state.history[i].train_accuracy}});
  }
  const json report = {
      {"seed", cfg.seed},
      {"epochs", cfg.epochs},
      {"trainable_param_count", state.params.parameter_count()},
      {"analytic_param_count",
       spot::FusionParams::parameter_count(cfg.width, cfg.hidden(), cfg.shared_irm)},
      {"final_train_accuracy", final_train.accuracy},
      {"history", history},
      {"checkpoint", a.out},
      {"config", spot::config_snapshot(cfg)},
  };
  const std::string text = report.dump(2);
  std::cout << text << "\n";
  if (!a.report.empty()) write_text(a.report, text + "\n");
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint = "model.ckpt";
  std::string data = "data";
  std::string base_file;
  std::string novel_file;
  std::string tier;
  std::string json_out;
};

int run_eval(const EvalArgs& a) {
  spot::TrainedState state = spot::load_state(a.checkpoint);
  if (!a.tier.empty()) state.config.tier_mode = spot::parse_tier_mode(a.tier);
  const fs::path dir(a.data);
  const auto base = spot::read_features(a.base_file.empty() ? dir / kBaseTest : fs::path(a.base_file));
  const auto novel =
      spot::read_features(a.novel_file.empty() ? dir / kNovelTest : fs::path(a.novel_file));
  const spot::Metrics m = spot::evaluate(state, base, novel);
  const double b = round2(m.base), n = round2(m.novel), hm = round2(m.hm);
  const std::string tier = spot::to_string(state.config.tier_mode);

  std::printf("%-8s %8s\n", "metric", "value");
  std::printf("%-8s %8.2f\n", "base", b);
  std::printf("%-8s %8.2f\n", "novel", n);
  std::printf("%-8s %8.2f\n", "hm", hm);
  std::printf("%-8s %8s\n", "tier", tier.c_str());
  const json j = {{"base", b},
                  {"novel", n},
                  {"hm", hm},
                  {"tier", tier},
                  {"base_per_class", round_all(m.base_per_class)},
                  {"novel_per_class", round_all(m.novel_per_class)}};
  std::cout << j.dump() << "\n";
  if (!a.json_out.empty()) write_text(a.json_out, j.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  ConfigFlags flags;
  std::string data;
  std::string out;
};

spot::Episode load_or_generate(const std::string& data, std::uint64_t seed) {
  if (!data.empty()) {
    const fs::path dir(data);
    return {spot::read_features(dir / kBaseTrain), spot::read_features(dir / kBaseTest),
            spot::read_features(dir / kNovelTest)};
  }
  spot::SynthSpec spec;
  spec.seed = seed;
  return spot::generate_episode(spec, 16, 50);
}

int run_ablate(const AblateArgs& a) {
  const spot::RunConfig cfg = a.flags.resolve(spot::default_config());
  const spot::Episode ep = load_or_generate(a.data, cfg.seed);
  std::ostringstream csv;
  csv << spot::ablation_csv_header() << "\n";
  std::size_t failed = 0;
  spot::run_ablation(cfg, ep, [&](const spot::AblationRow& row) {
    const std::string line = spot::ablation_csv_row(row);
    csv << line << "\n";
    if (!row.ok) ++failed;
    std::fprintf(stderr, "%s\n", line.c_str());
  });
  if (a.out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(a.out, csv.str());
  }
  std::fprintf(stderr, "%zu cells, %zu failed\n", spot::ablation_grid().size(), failed);
  return 0;
}

// ---------------------------------------------------------------- gradcheck

struct GradArgs {
  ConfigFlags flags;
  spot::GradientSuiteOptions opt;
};

spot::RunConfig gradcheck_defaults() {
  spot::RunConfig cfg = spot::default_config();
  cfg.width = 8;
  cfg.heads = 2;
  cfg.n_proto = 2;
  return cfg;
}

int run_gradcheck(const GradArgs& a) {
  const spot::RunConfig cfg = a.flags.resolve(gradcheck_defaults());
  const spot::GradientSuiteReport r = spot::run_gradient_suite(cfg, a.opt);
  constexpr double kTolerance = 1e-4;
  std::printf("%-16s %14s\n", "tensor", "max_rel_error");
  for (const auto& t : r.per_tensor) std::printf("%-16s %14.3e\n", t.name.c_str(), t.max_rel_error);
  std::printf("seeds %zu, parameters per instance %zu\n", r.seeds, r.parameters);
  std::printf("max relative error %.3e (tensor %s, seed %llu), tolerance %.0e: %s\n",
              r.max_rel_error, r.worst_tensor.c_str(),
              static_cast<unsigned long long>(r.worst_seed), kTolerance,
              r.max_rel_error < kTolerance ? "PASS" : "FAIL");
  return r.max_rel_error < kTolerance ? 0 : kExitNumeric;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string checkpoint = "model.ckpt";
  std::string data = "data";
  std::string workload;
  std::vector<std::size_t> ks{4, 8, 16, 32};
  std::size_t items = 0;
  std::size_t reps = spot::kMinBenchReps;
  std::size_t warmup = 1;
  std::string csv;
};

int run_bench(const BenchArgs& a) {
  const spot::TrainedState state = spot::load_state(a.checkpoint);
  spot::FeatureSet set = spot::read_features(
      a.workload.empty() ? fs::path(a.data) / kBaseTest : fs::path(a.workload));
  if (a.items > 0 && !set.items.empty()) {
    // Cycle the items to reach the requested workload size.
    spot::FeatureSet grown = set;
    grown.items.clear();
    grown.labels.clear();
    for (std::size_t i = 0; i < a.items; ++i) {
      grown.items.push_back(set.items[i % set.items.size()]);
      if (set.has_labels) grown.labels.push_back(set.labels[i % set.items.size()]);
    }
    set = std::move(grown);
  }
  const spot::ThroughputReport r = spot::bench_throughput(state, set, a.ks, a.reps, a.warmup);
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"k", row.k},
                    {"full_reference", row.full_reference},
                    {"items_per_sec", row.items_per_sec},
                    {"min_items_per_sec", row.min_items_per_sec},
                    {"max_items_per_sec", row.max_items_per_sec},
                    {"rep_seconds", row.rep_seconds},
                    {"accuracy", round2(row.accuracy)},
                    {"flops", row.flops}});
  }
  const json j = {{"items", r.items},
                  {"n_tok", r.n_tok},
                  {"reps", r.reps},
                  {"warmup", r.warmup},
                  {"rows", rows},
                  {"trainable_param_count", r.trainable_param_count},
                  {"analytic_param_count", r.analytic_param_count},
                  {"param_note", r.param_note}};
  std::cout << j.dump(2) << "\n";
  const std::string csv = spot::bench_csv(r);
  if (a.csv.empty()) {
    std::cerr << csv;
  } else {
    write_text(a.csv, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spotlighter: activated-token selection and representative fusion for "
               "few-shot image-text classification"};
  app.require_subcommand(1);
  app.footer("Exit status: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.\n"
             "SPOTLIGHTER_SEED sets the default seed.");
  const spot::RunConfig defaults = spot::default_config();

  GenArgs gen;
  gen.spec.seed = defaults.seed;
  auto* g = app.add_subcommand("gen", "generate a synthetic base/novel episode");
  g->add_option("--out", gen.out, "output directory")->capture_default_str();
  g->add_option("--n-classes", gen.spec.n_classes, "classes per split")->capture_default_str();
  g->add_option("--n-tok", gen.spec.n_tok, "tokens per item")->capture_default_str();
  g->add_option("--width", gen.spec.width, "token width")->capture_default_str();
  g->add_option("--signal-tokens", gen.spec.signal_tokens, "class-bearing tokens per item")
      ->capture_default_str();
  g->add_option("--noise-sigma", gen.spec.noise_sigma, "token noise relative to the unit signal")
      ->capture_default_str();
  g->add_option("--distractor-pool", gen.spec.distractor_pool, "shared distractor directions")
      ->capture_default_str();
  g->add_option("--seed", gen.spec.seed, "generator seed")->capture_default_str();
  g->add_option("--shots", gen.shots, "training items per base class")->capture_default_str();
  g->add_option("--test-per-class", gen.test_per_class, "test items per class")
      ->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train the fusion modules on base_train");
  t->add_option("--data", tr.data, "directory written by gen")->capture_default_str();
  t->add_option("--train", tr.train_file, "explicit training feature file");
  t->add_option("--out", tr.out, "checkpoint path")->capture_default_str();
  t->add_option("--report", tr.report, "also write the JSON report here");
  tr.flags.attach(t, defaults);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint on base and novel test sets");
  e->add_option("--checkpoint", ev.checkpoint, "checkpoint path")->capture_default_str();
  e->add_option("--data", ev.data, "directory written by gen")->capture_default_str();
  e->add_option("--base", ev.base_file, "explicit base test file");
  e->add_option("--novel", ev.novel_file, "explicit novel test file");
  e->add_option("--tier", ev.tier, "override tier mode: both, lev1 or lev2");
  e->add_option("--json", ev.json_out, "also write the JSON metrics here");

  AblateArgs ab;
  auto* a = app.add_subcommand("ablate", "run the 72-cell ablation grid and write CSV");
  a->add_option("--data", ab.data, "directory written by gen (default: generate in memory)");
  a->add_option("--out", ab.out, "CSV path (default: stdout)");
  ab.flags.attach(a, defaults);

  GradArgs gr;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every fusion gradient");
  gc->add_option("--seeds", gr.opt.seeds, "random instances")->capture_default_str();
  gc->add_option("--first-seed", gr.opt.first_seed, "seed of the first instance")
      ->capture_default_str();
  gc->add_option("--eps", gr.opt.eps, "central-difference step")->capture_default_str();
  gc->add_flag("--corrupt-gradient", gr.opt.corrupt_gradient)->group("");
  gr.flags.attach(gc, gradcheck_defaults());

  BenchArgs be;
  auto* b = app.add_subcommand("bench", "throughput sweep over k plus the full-token reference");
  b->add_option("--checkpoint", be.checkpoint, "checkpoint path")->capture_default_str();
  b->add_option("--data", be.data, "directory written by gen")->capture_default_str();
  b->add_option("--workload", be.workload, "explicit feature file (default: base test set)");
  b->add_option("--k", be.ks, "activated-token counts")->delimiter(',')->capture_default_str();
  b->add_option("--items", be.items, "cycle the workload to this many items");
  b->add_option("--reps", be.reps, "timed repetitions")->capture_default_str();
  b->add_option("--warmup", be.warmup, "untimed warmup passes")->capture_default_str();
  b->add_option("--csv", be.csv, "CSV path (default: stderr)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (g->parsed()) return run_gen(gen);
    if (t->parsed()) return run_train(tr);
    if (e->parsed()) return run_eval(ev);
    if (a->parsed()) return run_ablate(ab);
    if (gc->parsed()) return run_gradcheck(gr);
    if (b->parsed()) return run_bench(be);
  } catch (const spot::Error& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return spot::exit_code_for(err.code());
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUsage;
  }
  return kExitUsage;
}

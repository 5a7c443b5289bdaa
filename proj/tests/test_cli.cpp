// Copyright 2026 The Spotlighter Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spotlighter/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(SPOTLIGHTER_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Last line of stdout that parses as a JSON object.
json last_json_line(const std::string& out) {
  std::istringstream in(out);
  std::string line;
  json found;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '{') found = json::parse(line);
  }
  return found;
}

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("spot_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

const std::string kSmallGen =
    "--n-classes 3 --n-tok 8 --width 8 --signal-tokens 3 --shots 4 --test-per-class 5";
const std::string kSmallModel = "--width 8 --heads 2 --k-act 4 --n-proto 2";

}  // namespace

TEST_CASE("usage and exit codes") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("train --no-such-flag 1").code == 1);
  const std::string help = run("train --help").out;
  CHECK(help.find("--k-act") != std::string::npos);
  CHECK(help.find("0.02") != std::string::npos);
}

TEST_CASE("gen, train, eval and bench end to end") {
  Workspace ws;
  const std::string data = ws.path("data");
  REQUIRE(run("gen --out " + data + " " + kSmallGen + " --seed 7").code == 0);
  for (const char* f : {"base_train.spot", "base_test.spot", "novel_test.spot"}) {
    CHECK(fs::exists(fs::path(data) / f));
  }

  SUBCASE("generation is deterministic") {
    const std::string again = ws.path("again");
    REQUIRE(run("gen --out " + again + " " + kSmallGen + " --seed 7").code == 0);
    for (const char* f : {"base_train.spot", "base_test.spot", "novel_test.spot"}) {
      CHECK(slurp(fs::path(data) / f) == slurp(fs::path(again) / f));
    }
  }
  SUBCASE("invalid generator spec") {
    CHECK(run("gen --out " + ws.path("bad") + " --noise-sigma -1").code == 1);
  }

  const std::string ckpt = ws.path("m.ckpt");
  const Run tr = run("train --data " + data + " --out " + ckpt + " " + kSmallModel +
                     " --epochs 3 --seed 5");
  REQUIRE(tr.code == 0);
  const json report = json::parse(tr.out);
  CHECK(report.at("history").size() == 3);
  CHECK(report.at("seed") == 5);
  CHECK(report.at("trainable_param_count") == report.at("analytic_param_count"));
  CHECK(report.at("final_train_accuracy").is_number());
  for (const auto& h : report.at("history")) {
    for (const char* k : {"cls", "cls_low", "cls_high", "reg_text", "kl_visual", "local", "total"}) {
      CHECK(h.at("loss").contains(k));
    }
  }

  SUBCASE("training is reproducible") {
    const std::string ckpt2 = ws.path("m2.ckpt");
    REQUIRE(run("train --data " + data + " --out " + ckpt2 + " " + kSmallModel +
                " --epochs 3 --seed 5").code == 0);
    CHECK(slurp(ckpt) == slurp(ckpt2));
  }
  SUBCASE("zero loss weights report total equal to cls") {
    const Run z = run("train --data " + data + " --out " + ws.path("z.ckpt") + " " + kSmallModel +
                      " --epochs 2 --lambda1 0 --lambda2 0 --lambda3 0");
    REQUIRE(z.code == 0);
    for (const auto& h : json::parse(z.out).at("history")) {
      CHECK(h.at("loss").at("total").get<double>() == h.at("loss").at("cls").get<double>());
    }
  }
  SUBCASE("config file with flag override") {
    const std::string cfg = ws.path("run.cfg");
    std::ofstream(cfg) << "# small model\nwidth=8\nheads=2\nk_act=4\nn_proto=2\nepochs=1\nseed=3\n";
    const Run c = run("train --config " + cfg + " --seed 9 --data " + data + " --out " +
                      ws.path("c.ckpt"));
    REQUIRE(c.code == 0);
    const json j = json::parse(c.out);
    CHECK(j.at("seed") == 9);
    CHECK(j.at("history").size() == 1);
    std::ofstream(ws.path("bad.cfg")) << "not_a_key=1\n";
    CHECK(run("train --config " + ws.path("bad.cfg") + " --data " + data).code == 1);
  }
  SUBCASE("eval prints a table and matching JSON for every tier mode") {
    for (const char* tier : {"", "lev1", "lev2", "both"}) {
      const std::string flag = *tier ? std::string(" --tier ") + tier : "";
      const Run ev = run("eval --checkpoint " + ckpt + " --data " + data + flag);
      REQUIRE(ev.code == 0);
      const json j = last_json_line(ev.out);
      const double b = j.at("base"), n = j.at("novel"), hm = j.at("hm");
      CHECK(std::abs(hm - spot::harmonic_mean(b, n)) <= 0.01 + 1e-9);
      char row[64];
      std::snprintf(row, sizeof row, "%-8s %8.2f", "hm", hm);
      CHECK(ev.out.find(row) != std::string::npos);
      std::snprintf(row, sizeof row, "%-8s %8.2f", "base", b);
      CHECK(ev.out.find(row) != std::string::npos);
      if (*tier) CHECK(j.at("tier") == tier);
    }
    CHECK(run("eval --checkpoint " + ckpt + " --data " + data + " --tier lev3").code == 1);
  }
  SUBCASE("data errors") {
    CHECK(run("eval --checkpoint " + ws.path("missing.ckpt") + " --data " + data).code == 2);
    std::ofstream(ws.path("junk.ckpt")) << "definitely not a checkpoint";
    CHECK(run("eval --checkpoint " + ws.path("junk.ckpt") + " --data " + data).code == 2);
    std::string bytes = slurp(ckpt);
    bytes[8] = 9;
    std::ofstream(ws.path("v9.ckpt"), std::ios::binary) << bytes;
    CHECK(run("eval --checkpoint " + ws.path("v9.ckpt") + " --data " + data).code == 2);
    // Checkpoint width 8 against width-16 data.
    const std::string wide = ws.path("wide");
    REQUIRE(run("gen --out " + wide + " --n-classes 3 --n-tok 8 --width 16 --shots 2 "
                "--test-per-class 2").code == 0);
    CHECK(run("eval --checkpoint " + ckpt + " --data " + wide).code == 2);
  }
  SUBCASE("bench") {
    const Run small = run("bench --checkpoint " + ckpt + " --data " + data + " --k 2,4");
    CHECK(small.code == 1);
    const Run bn = run("bench --checkpoint " + ckpt + " --data " + data +
                       " --k 1,2,4,8 --items 100 --reps 5 --csv " + ws.path("b.csv"));
    REQUIRE(bn.code == 0);
    const json j = json::parse(bn.out);
    REQUIRE(j.at("rows").size() == 5);
    CHECK(j.at("rows")[4].at("full_reference") == true);
    CHECK(j.at("items") == 100);
    for (const auto& row : j.at("rows")) CHECK(row.at("items_per_sec").get<double>() > 0.0);
    const std::string csv = slurp(ws.path("b.csv"));
    CHECK(csv.rfind("k,full_reference,items_per_sec", 0) == 0);
  }
}

TEST_CASE("gradcheck") {
  const Run ok = run("gradcheck --seeds 3");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("PASS") != std::string::npos);
  CHECK(ok.out.find("trm.weight") != std::string::npos);
  CHECK(ok.out.find("irm0.wq") != std::string::npos);
  const Run bad = run("gradcheck --seeds 1 --corrupt-gradient");
  CHECK(bad.code == 3);
  CHECK(bad.out.find("FAIL") != std::string::npos);
  CHECK(run("gradcheck --seeds 1 --width 32 --heads 2").code == 1);
}

TEST_CASE("ablate writes the full grid") {
  Workspace ws;
  const std::string data = ws.path("data");
  REQUIRE(run("gen --out " + data + " " + kSmallGen).code == 0);
  const std::string csv = ws.path("ab.csv");
  REQUIRE(run("ablate --data " + data + " --out " + csv + " " + kSmallModel + " --epochs 1").code ==
          0);
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);
  CHECK(line == "cell,semantic,init,recalc,variant,tier,base,novel,hm,items_per_sec,status,error");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.find(",ok,") != std::string::npos);
  }
  CHECK(rows == 72);
}

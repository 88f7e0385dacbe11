// Copyright 2026 The mmimpute Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sys/wait.h>

#include "mmimpute/payload.hpp"
#include "test_util.hpp"

using mmimpute::testing::TempDir;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into stdout.
CliResult cli(const std::string& args) {
  const std::string cmd = std::string("'") + MMIMPUTE_CLI + "' " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

const std::string kSmall =
    " --toy-classes 3 --toy-per-class 20 --toy-dim 8 --per-class 4 --epochs 2 --batch-size 16 --seeds 1,2";

std::string run_dir_of(const std::string& out) {
  const auto pos = out.find("run ");
  REQUIRE(pos != std::string::npos);
  return out.substr(pos + 4, out.find('\n', pos) - pos - 4);
}

}  // namespace

TEST_CASE("cli: usage errors exit 1") {
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate").code == 1);
  TempDir dir("cli");
  const auto r = cli("build-pool --per-class 0 --out '" + dir.path().string() + "'");
  CHECK(r.code == 1);
  CHECK(r.out.find("per_class") != std::string::npos);
  CHECK(cli("train --preset nonsense --out '" + dir.path().string() + "'").code == 1);
  CHECK(cli("train --preset zs_visual --p 0.5 --out '" + dir.path().string() + "'").code == 1);
}

TEST_CASE("cli: help shows the documented defaults") {
  const auto pool = cli("build-pool --help");
  CHECK(pool.code == 0);
  CHECK(pool.out.find("--per-class") != std::string::npos);
  CHECK(pool.out.find("100") != std::string::npos);
  const auto train = cli("train --help");
  CHECK(train.code == 0);
  CHECK(train.out.find("0.0005") != std::string::npos);
  CHECK(train.out.find("--prompt-len") != std::string::npos);
  const auto pos = train.out.find("--prompt-len");
  CHECK(train.out.substr(pos, train.out.find('\n', pos) - pos).find("5") != std::string::npos);
  CHECK(train.out.find("128") != std::string::npos);
  CHECK(train.out.find("15") != std::string::npos);
}

TEST_CASE("cli: make-toy writes a loadable dataset") {
  TempDir dir("cli");
  const auto r = cli("make-toy --classes 2 --samples-per-class 10 --out '" + dir.path().string() + "'");
  CHECK(r.code == 0);
  CHECK(std::filesystem::exists(dir / "manifest.jsonl"));
  CHECK(std::filesystem::exists(dir / "class_means.json"));
  CHECK(cli("make-toy --samples-per-class 4 --out '" + dir.path().string() + "'").code == 1);
}

TEST_CASE("cli: suite writes the comparison table and plots") {
  TempDir dir("cli");
  const auto r = cli("suite" + kSmall + " --p 0.5 --q 0,1 --out '" + dir.path().string() + "'");
  CHECK(r.code == 0);
  const auto table = mmimpute::read_file(dir / "suite/results.csv");
  CHECK(table.rfind("preset,p,q,mean,std,seeds\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 7 * 2);
  CHECK(std::filesystem::exists(dir / "suite/top1.svg"));
  CHECK(std::filesystem::exists(dir / "suite/top1.png"));
  const auto report = cli("report --results '" + (dir / "suite/results.csv").string() + "'");
  CHECK(report.code == 0);
  CHECK(report.out.find("gti_mm") != std::string::npos);
}

TEST_CASE("cli: per-class sweep runs every value and plots") {
  TempDir dir("cli");
  const auto r = cli("sweep" + kSmall + " --axis per_class --values 4,2,1,3 --out '" + dir.path().string() + "'");
  CHECK(r.code == 0);
  CHECK(r.out.find("4 runs") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "sweep-per_class/results.csv"));
  CHECK(std::filesystem::exists(dir / "sweep-per_class/top1.svg"));
  CHECK(std::filesystem::exists(dir / "sweep-per_class/top1.png"));
  CHECK(cli("sweep --axis per_class --out '" + dir.path().string() + "'").code == 1);
}

TEST_CASE("cli: flags override the config file, which overrides defaults") {
  TempDir dir("cli");
  {
    std::ofstream(dir / "c.json") << R"({"p": 0.7, "optimizer": {"epochs": 1, "lr": 0.01}})";
  }
  const std::string base = "train" + kSmall + " --config '" + (dir / "c.json").string() + "' --out '" +
                           dir.path().string() + "'";
  const auto from_file = cli(base);
  REQUIRE(from_file.code == 0);
  auto cfg = nlohmann::json::parse(mmimpute::read_file(std::filesystem::path(run_dir_of(from_file.out)) / "config.json"));
  CHECK(cfg.at("p") == 0.7);
  CHECK(cfg.at("optimizer").at("lr") == 0.01);
  CHECK(cfg.at("optimizer").at("weight_decay") == 1e-4);
  // --epochs from kSmall beats the file
  CHECK(cfg.at("optimizer").at("epochs") == 2);

  const auto flagged = cli(base + " --p 0.8");
  REQUIRE(flagged.code == 0);
  cfg = nlohmann::json::parse(mmimpute::read_file(std::filesystem::path(run_dir_of(flagged.out)) / "config.json"));
  CHECK(cfg.at("p") == 0.8);
  CHECK(cfg.at("optimizer").at("lr") == 0.01);

  const auto eval = cli("eval" + kSmall + " --config '" + (dir / "c.json").string() + "' --eval-q 0.5 --out '" +
                        dir.path().string() + "'");
  CHECK(eval.code == 0);
  CHECK(eval.out.find("q=0.5") != std::string::npos);
}

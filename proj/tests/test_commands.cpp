// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "cald/commands.hpp"
#include "cald/prediction_io.hpp"

using namespace cald;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cald_cmd_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

const std::string fx = CALD_FIXTURE_DIR;

cli::SelectArgs select_args(const TempDir& dir) {
  cli::SelectArgs a;
  a.manifest = fx + "/manifest.json";
  a.predictions = fx + "/predictions.jsonl";
  a.labels = fx + "/labels.jsonl";
  a.out = dir / "selection.jsonl";
  return a;
}

}  // namespace

TEST_CASE("score writes one line per image in ascending metric order") {
  TempDir dir;
  cli::ScoreArgs a;
  a.manifest = fx + "/manifest.json";
  a.predictions = fx + "/predictions.jsonl";
  a.out = dir / "scores.jsonl";
  std::ostringstream log, err;
  REQUIRE(cli::cmd_score(a, log, err) == cli::kOk);
  std::istringstream lines(slurp(a.out));
  std::string line;
  std::vector<double> metrics;
  while (std::getline(lines, line)) {
    metrics.push_back(nlohmann::json::parse(line).at("metric_M").get<double>());
  }
  CHECK(metrics.size() == 3);
  CHECK(std::is_sorted(metrics.begin(), metrics.end()));
}

TEST_CASE("select writes a single cycle and honours the budget") {
  TempDir dir;
  auto a = select_args(dir);
  a.selection.budget = 1;
  std::ostringstream log, err;
  REQUIRE(cli::cmd_select(a, log, err) == cli::kOk);
  std::istringstream in(slurp(a.out));
  const auto cycles = parse_selection(in);
  REQUIRE(cycles.size() == 1);
  CHECK(cycles[0].cycle == 1);
  CHECK(cycles[0].final.size() == 1);
  CHECK(cycles[0].initial.size() == 2);
  for (const auto& e : cycles[0].initial) CHECK(e.image_id != "a");
}

TEST_CASE("select exit codes") {
  TempDir dir;
  std::ostringstream log, err;
  auto a = select_args(dir);
  a.selection.beta = 2.5;
  CHECK(cli::cmd_select(a, log, err) == cli::kConfigError);
  CHECK_FALSE(fs::exists(a.out));
  a = select_args(dir);
  a.selection.budget = 3;
  CHECK(cli::cmd_select(a, log, err) == cli::kConfigError);
  a = select_args(dir);
  a.selection.variant = "median";
  CHECK(cli::cmd_select(a, log, err) == cli::kConfigError);
  a = select_args(dir);
  a.selection.augmentations = "FX";
  CHECK(cli::cmd_select(a, log, err) == cli::kConfigError);
  a = select_args(dir);
  a.labels = dir / "missing.jsonl";
  CHECK(cli::cmd_select(a, log, err) == cli::kConfigError);
  a = select_args(dir);
  spit(dir / "bad.jsonl", "{\"image_id\": \"b\", \"objects\": [{\"class\": \"horse\"}]}\n");
  a.labels = dir / "bad.jsonl";
  CHECK(cli::cmd_select(a, log, err) == cli::kDataError);
  CHECK(err.str().find("line 1") != std::string::npos);
}

TEST_CASE("flags override the config file, which overrides defaults") {
  TempDir dir;
  spit(dir / "config.json", R"({"beta": 0.5, "budget_per_cycle": 1, "expansion_ratio": 0.0})");
  std::ostringstream log, err;
  auto a = select_args(dir);
  a.selection.config_path = dir / "config.json";
  REQUIRE(cli::cmd_select(a, log, err) == cli::kOk);
  std::istringstream in(slurp(a.out));
  auto cycles = parse_selection(in);
  CHECK(cycles[0].initial.size() == 1);

  a.selection.expansion = 1.0;
  REQUIRE(cli::cmd_select(a, log, err) == cli::kOk);
  std::istringstream in2(slurp(a.out));
  cycles = parse_selection(in2);
  CHECK(cycles[0].initial.size() == 2);

  spit(dir / "bad.json", R"({"gamma": 1})");
  a.selection.config_path = dir / "bad.json";
  CHECK(cli::cmd_select(a, log, err) == cli::kConfigError);
}

TEST_CASE("select output is identical across reruns and job counts") {
  TempDir dir;
  std::ostringstream log, err;
  auto a = select_args(dir);
  a.selection.budget = 2;
  REQUIRE(cli::cmd_select(a, log, err) == cli::kOk);
  const auto first = slurp(a.out);
  a.jobs = 3;
  REQUIRE(cli::cmd_select(a, log, err) == cli::kOk);
  CHECK(slurp(a.out) == first);
}

TEST_CASE("simulate writes metrics and an importable snapshot") {
  TempDir dir;
  cli::SimulateArgs a;
  a.strategies = {"cald", "random"};
  a.seeds = 2;
  a.images = 150;
  a.initial = 15;
  a.selection.budget = 10;
  a.selection.cycles = 2;
  a.out_csv = dir / "metrics.csv";
  a.emit_dir = dir / "snap";
  std::ostringstream log, err;
  REQUIRE(cli::cmd_simulate(a, log, err) == cli::kOk);
  const auto csv = slurp(a.out_csv);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 2 * 2);

  cli::SelectArgs s;
  s.manifest = dir / "snap/manifest.json";
  s.predictions = dir / "snap/predictions.jsonl";
  s.labels = dir / "snap/labels.jsonl";
  s.out = dir / "sel.jsonl";
  s.selection.budget = 10;
  REQUIRE(cli::cmd_select(s, log, err) == cli::kOk);

  a.strategies = {"cald_beta:3"};
  CHECK(cli::cmd_simulate(a, log, err) == cli::kConfigError);
  a.strategies = {"cald"};
  a.initial = 1000;
  CHECK(cli::cmd_simulate(a, log, err) == cli::kConfigError);
}

TEST_CASE("seed default comes from the environment") {
  ::setenv("CALD_SEED", "42", 1);
  CHECK(cli::default_seed() == 42);
  ::setenv("CALD_SEED", "x1", 1);
  CHECK(cli::default_seed() == 0);
  ::unsetenv("CALD_SEED");
  CHECK(cli::default_seed() == 0);
}

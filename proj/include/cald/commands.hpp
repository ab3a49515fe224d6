// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cald/pipeline.hpp"

namespace cald::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDataError = 2 };

// Selection settings as given on the command line. Unset fields fall back to
// the config file, then to SelectionConfig defaults.
struct SelectionFlags {
  std::optional<std::string> config_path;
  std::optional<double> beta;
  std::optional<double> expansion;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> cycles;
  std::optional<std::string> augmentations;  // e.g. "FCDR"
  std::optional<double> retention;
  std::optional<std::string> variant;        // min | mean
  std::optional<std::string> default_m;      // beta | zero
  std::optional<std::string> count_mode;     // raw_counts | normalized_counts
};

struct ScoreArgs {
  std::string manifest;
  std::string predictions;
  std::string out;
  SelectionFlags selection;
  std::size_t jobs = 1;
};

struct SelectArgs {
  std::string manifest;
  std::string predictions;
  std::string labels;
  std::string out;
  SelectionFlags selection;
  std::size_t jobs = 1;
};

struct SimulateArgs {
  std::vector<std::string> strategies{"cald"};
  std::size_t seeds = 1;
  std::uint64_t base_seed = 0;
  std::size_t images = 2000;
  std::size_t classes = 10;
  double imbalance = 1.0;
  std::size_t initial = 100;
  double kappa = 20.0;
  std::string out_csv;
  std::optional<std::string> emit_dir;
  SelectionFlags selection;  // budget defaults to 100 and cycles to 3 here
  std::size_t jobs = 1;
};

// Each command writes its declared output and a short report to `log`;
// diagnostics go to `err`. Returns an ExitCode.
int cmd_score(const ScoreArgs& args, std::ostream& log, std::ostream& err);
int cmd_select(const SelectArgs& args, std::ostream& log, std::ostream& err);
int cmd_simulate(const SimulateArgs& args, std::ostream& log, std::ostream& err);

// Seed default: $CALD_SEED when set and numeric, otherwise 0.
std::uint64_t default_seed();

}  // namespace cald::cli

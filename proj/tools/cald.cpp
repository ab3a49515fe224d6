// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cald/commands.hpp"

namespace {

constexpr const char* kSchemas = R"(
File formats (one JSON object per line unless noted):
  manifest.json     {"class_names": [...], "image_ids": [...],
                     "augmentations": {"D": {"ratio": 0.8}, "R": {"angle": 5}, ...}}   (single object)
  predictions.jsonl {"image_id", "augmentation": "original"|"F"|"C"|"D"|"R"|"G"|"S",
                     "width", "height", "detections": [{"box": [x0,y0,x1,y1], "scores": {"class": conf}}]}
                    Augmented records are in the augmented frame; every image needs "original".
  labels.jsonl      {"image_id", "objects": [{"class": "..."}]}
  selection.jsonl   header {"format": "cald-selection", "version": 1, ...}, then
                    {"cycle", "rank", "image_id", "metric_M", "js_mutual", "stage": "initial"|"final"}
  --config file     JSON object with any of: beta, expansion_ratio, budget_per_cycle, cycles,
                    augmentations ("FCDR"), retention_threshold, metric_variant (min|mean),
                    default_m_policy (beta|zero), count_mode (raw_counts|normalized_counts)
Exit codes: 0 success, 1 usage or configuration error, 2 data error.
)";

void add_selection_flags(CLI::App* cmd, cald::cli::SelectionFlags& f, bool with_budget) {
  cmd->add_option("--config", f.config_path, "JSON config file with SelectionConfig keys");
  cmd->add_option("--beta", f.beta, "Base point for |m_k - beta|, in [0, 2] (default 1.3)");
  cmd->add_option("--variant", f.variant, "Per-image reduction over predictions: min|mean (default min)");
  cmd->add_option("--augmentations", f.augmentations, "Augmentation tags to score with (default FCDR)");
  cmd->add_option("--retention", f.retention, "Drop detections whose top confidence is below this (default 0.1)");
  cmd->add_option("--default-m", f.default_m, "Metric for images without predictions: beta|zero (default beta)");
  if (with_budget) {
    cmd->add_option("--budget", f.budget, "Images to select per cycle");
    cmd->add_option("--expansion", f.expansion, "Extra Stage-1 share over the budget (default 0.2)");
    cmd->add_option("--count-mode", f.count_mode,
                    "Labeled-pool softmax input: raw_counts|normalized_counts (default raw_counts)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage active-learning sample selection for object detectors"};
  app.footer(kSchemas);
  app.require_subcommand(1);

  cald::cli::ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Write per-image consistency metrics, ascending");
  score_cmd->add_option("--manifest", score.manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--predictions", score.predictions, "predictions.jsonl")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--out", score.out, "Output score report (jsonl)")->required();
  score_cmd->add_option("--jobs", score.jobs, "Worker threads for scoring")->check(CLI::PositiveNumber);
  add_selection_flags(score_cmd, score.selection, false);
  score_cmd->footer(kSchemas);

  cald::cli::SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "Two-stage selection of the next batch to annotate");
  select_cmd->add_option("--manifest", select.manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  select_cmd->add_option("--predictions", select.predictions, "predictions.jsonl")->required()->check(CLI::ExistingFile);
  select_cmd->add_option("--labels", select.labels, "labels.jsonl of the labeled pool")->required()->check(CLI::ExistingFile);
  select_cmd->add_option("--out", select.out, "Output selection.jsonl")->required();
  select_cmd->add_option("--jobs", select.jobs, "Worker threads for scoring")->check(CLI::PositiveNumber);
  add_selection_flags(select_cmd, select.selection, true);
  select_cmd->footer(kSchemas);

  cald::cli::SimulateArgs simulate;
  simulate.base_seed = cald::cli::default_seed();
  auto* sim_cmd = app.add_subcommand("simulate", "Run the synthetic active-learning experiment");
  sim_cmd->add_option("--strategy", simulate.strategies,
                      "cald | random | cald_mean_variant | cald_beta:<beta> (repeatable)")
      ->capture_default_str();
  sim_cmd->add_option("--seeds", simulate.seeds, "Number of seeds")->capture_default_str();
  sim_cmd->add_option("--seed", simulate.base_seed, "First seed (default $CALD_SEED or 0)")->capture_default_str();
  sim_cmd->add_option("--cycles", simulate.selection.cycles, "Active-learning cycles (default 3)");
  sim_cmd->add_option("--images", simulate.images, "Simulated images")->capture_default_str();
  sim_cmd->add_option("--classes", simulate.classes, "Simulated classes")->capture_default_str();
  sim_cmd->add_option("--imbalance", simulate.imbalance, "Zipf exponent of class frequencies")->capture_default_str();
  sim_cmd->add_option("--initial", simulate.initial, "Randomly labeled images before cycle 1")->capture_default_str();
  sim_cmd->add_option("--kappa", simulate.kappa, "Skill half-saturation count")->capture_default_str();
  sim_cmd->add_option("--out-csv", simulate.out_csv, "Per-seed metrics CSV")->required();
  sim_cmd->add_option("--emit-dir", simulate.emit_dir,
                      "Also write manifest/predictions/labels for the first seed's first cycle");
  sim_cmd->add_option("--jobs", simulate.jobs, "Worker threads for scoring")->check(CLI::PositiveNumber);
  add_selection_flags(sim_cmd, simulate.selection, true);
  sim_cmd->footer(kSchemas);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cald::cli::kConfigError;
  }

  if (score_cmd->parsed()) return cald::cli::cmd_score(score, std::cout, std::cerr);
  if (select_cmd->parsed()) return cald::cli::cmd_select(select, std::cout, std::cerr);
  return cald::cli::cmd_simulate(simulate, std::cout, std::cerr);
}

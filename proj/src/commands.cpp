// SPDX-License-Identifier: Apache-2.0
#include "cald/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cald/errors.hpp"
#include "cald/prediction_io.hpp"
#include "cald/rng.hpp"
#include "cald/simulator.hpp"

namespace cald::cli {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

// Writes to a sibling temp file and renames, so a failed run leaves no partial output.
void write_output(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
    if (!out) throw ConfigError("failed writing '" + path + "'");
  }
  std::filesystem::rename(tmp, path);
}

MetricVariant parse_variant(const std::string& s) {
  if (s == "min") return MetricVariant::Min;
  if (s == "mean") return MetricVariant::Mean;
  throw ConfigError("variant must be 'min' or 'mean', got '" + s + "'");
}

DefaultMPolicy parse_default_m(const std::string& s) {
  if (s == "beta") return DefaultMPolicy::Beta;
  if (s == "zero") return DefaultMPolicy::Zero;
  throw ConfigError("default_m_policy must be 'beta' or 'zero', got '" + s + "'");
}

CountMode parse_count_mode(const std::string& s) {
  if (s == "raw_counts") return CountMode::RawCounts;
  if (s == "normalized_counts") return CountMode::NormalizedCounts;
  throw ConfigError("count_mode must be 'raw_counts' or 'normalized_counts', got '" + s + "'");
}

// Config file keys mirror SelectionConfig field names.
void apply_config_file(const std::string& path, SelectionFlags& flags) {
  auto in = open_input(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config '" + path + "' must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "beta") flags.beta = flags.beta.value_or(value.get<double>());
      else if (key == "expansion_ratio") flags.expansion = flags.expansion.value_or(value.get<double>());
      else if (key == "budget_per_cycle") flags.budget = flags.budget.value_or(value.get<std::size_t>());
      else if (key == "cycles") flags.cycles = flags.cycles.value_or(value.get<std::size_t>());
      else if (key == "augmentations") flags.augmentations = flags.augmentations.value_or(value.get<std::string>());
      else if (key == "retention_threshold") flags.retention = flags.retention.value_or(value.get<double>());
      else if (key == "metric_variant") flags.variant = flags.variant.value_or(value.get<std::string>());
      else if (key == "default_m_policy") flags.default_m = flags.default_m.value_or(value.get<std::string>());
      else if (key == "count_mode") flags.count_mode = flags.count_mode.value_or(value.get<std::string>());
      else throw ConfigError("config '" + path + "': unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
}

SelectionConfig resolve(SelectionFlags flags, SelectionConfig base, const DatasetManifest* manifest) {
  if (flags.config_path) apply_config_file(*flags.config_path, flags);
  if (flags.beta) base.beta = *flags.beta;
  if (flags.expansion) base.expansion_ratio = *flags.expansion;
  if (flags.budget) base.budget_per_cycle = *flags.budget;
  if (flags.cycles) base.cycles = *flags.cycles;
  if (flags.retention) base.retention_threshold = *flags.retention;
  if (flags.variant) base.metric_variant = parse_variant(*flags.variant);
  if (flags.default_m) base.default_m_policy = parse_default_m(*flags.default_m);
  if (flags.count_mode) base.count_mode = parse_count_mode(*flags.count_mode);
  const std::string tags = flags.augmentations.value_or("FCDR");
  base.augmentations = manifest ? manifest->augmentation_set(tags) : DatasetManifest{}.augmentation_set(tags);
  base.validate();
  return base;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const InsufficientCandidatesError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

DatasetManifest load_manifest(const std::string& path) {
  auto in = open_input(path);
  return parse_manifest(in);
}

PredictionSet load_predictions(const std::string& path, const DatasetManifest& manifest) {
  auto in = open_input(path);
  return parse_predictions(in, manifest);
}

}  // namespace

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CALD_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
  }
  return 0;
}

int cmd_score(const ScoreArgs& args, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    // Flags are validated before touching any input file.
    resolve(args.selection, {}, nullptr);
    const auto manifest = load_manifest(args.manifest);
    const auto config = resolve(args.selection, {}, &manifest);
    const auto predictions = load_predictions(args.predictions, manifest);

    std::vector<std::string> ids;
    for (const auto& img : predictions.images()) ids.push_back(img.image_id);
    const auto scored = score_images(ids, predictions, manifest.num_classes(), config, args.jobs);
    std::vector<ImageInformation> infos;
    for (const auto& s : scored) infos.push_back(s.info);
    std::sort(infos.begin(), infos.end(), [](const auto& a, const auto& b) {
      if (a.metric != b.metric) return a.metric < b.metric;
      return a.image_id < b.image_id;
    });
    std::ostringstream out;
    write_scores(out, infos);
    write_output(args.out, out.str());
    log << "scored " << infos.size() << " images -> " << args.out << '\n';
    return kOk;
  });
}

int cmd_select(const SelectArgs& args, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    resolve(args.selection, {}, nullptr);
    const auto manifest = load_manifest(args.manifest);
    const auto config = resolve(args.selection, {}, &manifest);
    const auto predictions = load_predictions(args.predictions, manifest);
    auto labels_in = open_input(args.labels);
    const auto labels = parse_labels(labels_in, manifest);

    PoolState pool;
    pool.num_classes = manifest.num_classes();
    pool.labeled = labels;
    if (!manifest.image_ids.empty()) {
      pool.unlabeled.insert(manifest.image_ids.begin(), manifest.image_ids.end());
    } else {
      for (const auto& img : predictions.images()) pool.unlabeled.insert(img.image_id);
    }
    for (const auto& [id, counts] : labels) pool.unlabeled.erase(id);
    if (config.budget_per_cycle > pool.unlabeled.size()) {
      throw InsufficientCandidatesError(config.budget_per_cycle, pool.unlabeled.size());
    }

    const CycleRecord record = plan_cycle(pool, predictions, config, args.jobs);
    std::ostringstream out;
    write_selection(out, std::span(&record, 1));
    write_output(args.out, out.str());
    log << "selected " << record.final.size() << " of " << pool.unlabeled.size()
        << " unlabeled images (initial pool " << record.initial.size() << ") -> " << args.out
        << '\n';
    return kOk;
  });
}

int cmd_simulate(const SimulateArgs& args, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    std::vector<sim::Strategy> strategies;
    for (const auto& s : args.strategies) strategies.push_back(sim::Strategy::parse(s));
    if (strategies.empty()) throw ConfigError("at least one --strategy is required");
    if (args.seeds == 0) throw ConfigError("--seeds must be at least 1");

    sim::ExperimentConfig config;
    config.num_images = args.images;
    config.num_classes = args.classes;
    config.imbalance_exponent = args.imbalance;
    config.initial_labeled = args.initial;
    config.detector.kappa = args.kappa;
    config.selection = resolve(args.selection, sim::ExperimentConfig::default_selection(), nullptr);
    if (config.initial_labeled == 0 || config.initial_labeled > config.num_images) {
      throw ConfigError("--initial must lie in [1, --images]");
    }

    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < args.seeds; ++i) seeds.push_back(args.base_seed + i);

    std::vector<sim::MetricsRow> rows;
    for (const auto& strategy : strategies) {
      auto r = sim::run_experiment(strategy, config, seeds, args.jobs);
      rows.insert(rows.end(), r.begin(), r.end());
      log << "finished " << strategy.name() << " (" << seeds.size() << " seeds)\n";
    }
    std::ostringstream csv;
    sim::write_metrics_csv(csv, rows);
    write_output(args.out_csv, csv.str());
    sim::write_summary(log, sim::summarize(rows));

    if (args.emit_dir) {
      std::filesystem::create_directories(*args.emit_dir);
      const auto world = sim::generate_world(config.num_images, config.num_classes,
                                             config.imbalance_exponent, seeds.front());
      const sim::SimOracle oracle(world);
      const auto ids = world.image_ids();
      const auto pool = make_initial_pool(ids, world.num_classes, config.initial_labeled, oracle,
                                          derive_seed(seeds.front(), "initial_pool"));
      std::vector<std::string> labeled;
      for (const auto& [id, counts] : pool.labeled) labeled.push_back(id);
      std::ostringstream manifest, predictions, labels;
      sim::export_dataset(world,
                          sim::SimDetectorModel::from_counts(pool.labeled_counts(), config.detector),
                          config.selection.augmentations, derive_seed(seeds.front(), std::uint64_t{1}), labeled,
                          manifest, predictions, labels);
      const std::filesystem::path dir(*args.emit_dir);
      write_output((dir / "manifest.json").string(), manifest.str());
      write_output((dir / "predictions.jsonl").string(), predictions.str());
      write_output((dir / "labels.jsonl").string(), labels.str());
      log << "wrote first-cycle dataset snapshot to " << dir.string() << '\n';
    }
    return kOk;
  });
}

}  // namespace cald::cli

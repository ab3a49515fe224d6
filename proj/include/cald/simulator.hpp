// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cald/class_distribution.hpp"
#include "cald/geometry.hpp"
#include "cald/pipeline.hpp"
#include "cald/prediction.hpp"
#include "cald/prediction_io.hpp"

namespace cald::sim {

struct SimObject {
  std::size_t class_id;
  BoundingBox box;
};

struct SimImage {
  std::string image_id;
  ImageSize size;
  std::vector<SimObject> objects;  // at least one
};

struct SimWorld {
  std::size_t num_classes = 0;
  std::vector<double> class_frequencies;  // proportional to rank^-exponent, sums to 1
  std::vector<SimImage> images;

  const SimImage& image(const std::string& image_id) const;
  std::vector<std::string> image_ids() const;
  LabelCounts counts(const std::string& image_id) const;
  DatasetManifest manifest(std::span<const AugmentationSpec> augmentations) const;

 private:
  friend SimWorld generate_world(std::size_t, std::size_t, double, std::uint64_t);
  std::unordered_map<std::string, std::size_t> index_;
};

// Images hold 1-5 objects with classes drawn from a Zipf-like law. Deterministic per seed.
SimWorld generate_world(std::size_t num_images, std::size_t num_classes,
                        double imbalance_exponent, std::uint64_t seed);

struct DetectorParams {
  double kappa = 20.0;             // skill = n / (n + kappa)
  double jitter_scale = 0.05;      // box jitter sd as a fraction of box size at skill 0
  double misclass_prob = 0.6;      // probability of a wrong label at skill 0
  double max_temperature = 0.5;    // score softening at skill 0
};

// Synthetic detector whose per-class skill grows with labeled instances. At
// skill 1 it reproduces the mapped ground truth exactly with one-hot scores.
struct SimDetectorModel {
  std::vector<double> skill;
  DetectorParams params;

  static SimDetectorModel from_counts(std::span<const std::int64_t> labeled_counts,
                                      const DetectorParams& params = {});
  static SimDetectorModel uniform(std::size_t num_classes, double skill,
                                  const DetectorParams& params = {});

  double detection_probability(std::size_t c) const { return 0.5 + 0.5 * skill[c]; }
  double jitter(std::size_t c) const { return (1.0 - skill[c]) * params.jitter_scale; }
  double misclassification(std::size_t c) const { return (1.0 - skill[c]) * params.misclass_prob; }
  double temperature(std::size_t c) const { return (1.0 - skill[c]) * params.max_temperature; }
};

// Predictions for one (image, augmentation), in the augmented frame.
// Deterministic per (seed, image_id, augmentation).
std::vector<PredictionRecord> simulate_detector(const SimWorld& world, const SimDetectorModel& model,
                                                const std::string& image_id,
                                                const AugmentationSpec& aug, std::uint64_t seed);

// Original plus every augmented view for one image.
ImagePredictions simulate_image(const SimWorld& world, const SimDetectorModel& model,
                                const std::string& image_id,
                                std::span<const AugmentationSpec> augmentations, std::uint64_t seed);

// (1 - mean IoU of the best prediction per object) + fraction of objects whose
// best prediction is missing or has the wrong top class.
double detection_error(const SimImage& image, std::span<const PredictionRecord> original);

// Labeled-pool class counts (normalized by their total) against the uniform distribution.
double balance_js(std::span<const std::int64_t> counts);

class SimPredictionSource final : public PredictionSource {
 public:
  SimPredictionSource(const SimWorld& world, SimDetectorModel model,
                      std::vector<AugmentationSpec> augmentations, std::uint64_t seed)
      : world_(world), model_(std::move(model)), augs_(std::move(augmentations)), seed_(seed) {}

  std::optional<ImagePredictions> find(const std::string& image_id) const override;

 private:
  const SimWorld& world_;
  SimDetectorModel model_;
  std::vector<AugmentationSpec> augs_;
  std::uint64_t seed_;
};

class SimOracle final : public LabelOracle {
 public:
  explicit SimOracle(const SimWorld& world) : world_(world) {}
  LabelCounts label(const std::string& image_id) const override { return world_.counts(image_id); }

 private:
  const SimWorld& world_;
};

enum class StrategyKind { Cald, Random, CaldMean, CaldBeta };

struct Strategy {
  StrategyKind kind = StrategyKind::Cald;
  double beta = 1.3;  // CaldBeta only

  // "cald", "random", "cald_mean_variant" or "cald_beta:<beta>".
  static Strategy parse(const std::string& text);
  std::string name() const;
};

struct ExperimentConfig {
  std::size_t num_images = 2000;
  std::size_t num_classes = 10;
  double imbalance_exponent = 1.0;
  std::size_t initial_labeled = 100;
  DetectorParams detector;
  SelectionConfig selection = default_selection();

  static SelectionConfig default_selection();
};

struct MetricsRow {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t cycle = 0;
  double mean_error = 0.0;       // over the images selected this cycle
  double balance_js = 0.0;       // labeled pool after this cycle's labels arrive
  double mean_m_selected = 0.0;  // metric M of this cycle's selection
  double mean_m_labeled = 0.0;   // metric M of the labeled pool before the selection is added

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

std::vector<MetricsRow> run_experiment(const Strategy& strategy, const ExperimentConfig& config,
                                       std::span<const std::uint64_t> seeds, std::size_t jobs = 1);

struct SummaryRow {
  std::string strategy;
  std::size_t cycle = 0;
  std::size_t seeds = 0;
  double mean_error = 0.0, sd_error = 0.0;
  double mean_balance = 0.0, sd_balance = 0.0;
  double mean_m_selected = 0.0, sd_m_selected = 0.0;
  double mean_m_labeled = 0.0, sd_m_labeled = 0.0;
};

// Mean and sample standard deviation across seeds, per (strategy, cycle).
std::vector<SummaryRow> summarize(std::span<const MetricsRow> rows);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
void write_summary(std::ostream& out, std::span<const SummaryRow> rows);

// Dumps one detector snapshot in the file formats the CLI ingests.
void export_dataset(const SimWorld& world, const SimDetectorModel& model,
                    std::span<const AugmentationSpec> augmentations, std::uint64_t seed,
                    std::span<const std::string> labeled_ids, std::ostream& manifest_out,
                    std::ostream& predictions_out, std::ostream& labels_out);

}  // namespace cald::sim

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cald/class_distribution.hpp"
#include "cald/consistency.hpp"
#include "cald/geometry.hpp"
#include "cald/prediction.hpp"

namespace cald {

// Flip, cutout, downsize(0.8), rotation(5 degrees).
std::vector<AugmentationSpec> default_augmentations();

struct SelectionConfig {
  double beta = 1.3;
  double expansion_ratio = 0.20;
  std::size_t budget_per_cycle = 500;
  std::size_t cycles = 1;
  std::vector<AugmentationSpec> augmentations = default_augmentations();
  double retention_threshold = 0.1;
  MetricVariant metric_variant = MetricVariant::Min;
  DefaultMPolicy default_m_policy = DefaultMPolicy::Beta;
  CountMode count_mode = CountMode::RawCounts;

  void validate() const;
  ScoringOptions scoring() const { return {beta, metric_variant, default_m_policy}; }
  // ceil(budget * (1 + expansion_ratio))
  std::size_t initial_pool_size() const;
};

// Ground-truth labels, queried only for selected images.
class LabelOracle {
 public:
  virtual ~LabelOracle() = default;
  virtual LabelCounts label(const std::string& image_id) const = 0;
};

// Detector output per image. Must be safe to call concurrently.
class PredictionSource {
 public:
  virtual ~PredictionSource() = default;
  virtual std::optional<ImagePredictions> find(const std::string& image_id) const = 0;
};

struct CycleEntry {
  std::string image_id;
  double metric = 0.0;
  double js = 0.0;

  friend bool operator==(const CycleEntry&, const CycleEntry&) = default;
};

struct CycleRecord {
  std::size_t cycle = 0;
  std::vector<CycleEntry> initial;  // Stage-1 order
  std::vector<CycleEntry> final;    // selection order

  friend bool operator==(const CycleRecord&, const CycleRecord&) = default;
};

struct PoolState {
  std::size_t num_classes = 0;
  std::map<std::string, LabelCounts> labeled;
  std::set<std::string> unlabeled;
  std::size_t cycle_index = 0;
  std::vector<CycleRecord> history;

  LabelCounts labeled_counts() const;
};

// Builds the starting pool: `initial_size` images drawn by random_baseline are
// labeled through the oracle, the rest stay unlabeled.
PoolState make_initial_pool(std::span<const std::string> image_ids, std::size_t num_classes,
                            std::size_t initial_size, const LabelOracle& oracle,
                            std::uint64_t seed);

// Uniform sample of unlabeled ids without replacement, deterministic per seed.
std::vector<std::string> random_baseline(const PoolState& pool, std::size_t budget,
                                         std::uint64_t seed);

// An image's Stage-1 score together with its predicted class distribution.
struct ScoredImage {
  ImageInformation info;
  ClassDistribution distribution;
};

// Scores each id (after applying the retention threshold). Throws
// IncompleteInputError listing every id without usable predictions. Output
// order follows `ids` for any `jobs`.
std::vector<ScoredImage> score_images(std::span<const std::string> ids,
                                      const PredictionSource& source, std::size_t num_classes,
                                      const SelectionConfig& config, std::size_t jobs = 1);

// Smallest-metric images, ascending, ties by id; at most initial_pool_size().
std::vector<std::string> stage_one(std::span<const ImageInformation> scores,
                                   const SelectionConfig& config);

// Both selection stages for the current unlabeled pool, without labeling.
// Selects min(budget, |unlabeled|) images.
CycleRecord plan_cycle(const PoolState& pool, const PredictionSource& source,
                       const SelectionConfig& config, std::size_t jobs = 1);

// plan_cycle, then labels the final selection and moves it into the labeled pool.
PoolState run_cycle(const PoolState& pool, const PredictionSource& source,
                    const LabelOracle& oracle, const SelectionConfig& config,
                    std::size_t jobs = 1);

// Hill-climbs beta from 1.0, comparing beta, beta + step and beta - step at
// every step and moving to the strictly best; candidates outside (0, 2) are skipped.
double beta_search(const std::function<double(double)>& evaluate, double step = 0.1,
                   int max_steps = 5);

}  // namespace cald

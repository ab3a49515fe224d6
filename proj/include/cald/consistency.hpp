// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cald/geometry.hpp"
#include "cald/prediction.hpp"

namespace cald {

// Divides by the sum. Throws EmptyScoreError when the entries sum to zero.
std::vector<double> normalize(std::span<const double> scores);

// Jensen-Shannon divergence with base-2 logarithms, so the result lies in [0, 1].
// Inputs must have equal length, non-negative entries and sum to 1 within 1e-6;
// anything else throws InvalidDistributionError.
double js_divergence(std::span<const double> p, std::span<const double> q);

struct Match {
  std::size_t index;
  double iou;
};

// Candidate with the largest IoU against `ref_box`; the lowest index wins ties.
// nullopt when there are no candidates or none overlaps.
std::optional<Match> match_prediction(const BoundingBox& ref_box,
                                      std::span<const PredictionRecord> candidates);

struct ConsistencyRecord {
  std::size_t reference_index = 0;
  std::optional<std::size_t> corresponding_index;
  double c_box = 0.0;
  double c_score = 0.0;
  double m = 0.0;
};

// Box consistency is the IoU. Score consistency is (1 - JS) of the normalized
// score vectors, weighted by the mean of the two raw maximum confidences.
ConsistencyRecord pair_consistency(const PredictionRecord& ref, const PredictionRecord& cor);

enum class MetricVariant { Min, Mean };

// What an image with no reference predictions scores as.
enum class DefaultMPolicy { Beta, Zero };

struct ScoringOptions {
  double beta = 1.3;
  MetricVariant variant = MetricVariant::Min;
  DefaultMPolicy default_m = DefaultMPolicy::Beta;

  // beta must lie in [0, 2].
  void validate() const;
  double default_value() const noexcept { return default_m == DefaultMPolicy::Beta ? beta : 0.0; }
};

// Reference predictions mapped into one augmented frame, together with the
// detector's own predictions on that augmented image.
struct AugmentedView {
  AugmentationSpec aug;
  std::vector<PredictionRecord> references;
  std::vector<PredictionRecord> predictions;
};

struct ImageInformation {
  std::string image_id;
  double metric = 0.0;  // lower is more informative
  std::vector<std::pair<AugmentationSpec, double>> per_augmentation;
  bool no_references = false;  // metric came from the default policy
};

// Per augmentation, the smallest |m_k - beta| over reference predictions
// (an unmatched reference has m_k = 0); the metric is the mean over augmentations.
ImageInformation image_information(std::string image_id, std::span<const AugmentedView> views,
                                   double beta, DefaultMPolicy policy = DefaultMPolicy::Beta);

// Same as image_information, averaging |m_k - beta| over references instead of taking the minimum.
ImageInformation image_information_mean(std::string image_id,
                                        std::span<const AugmentedView> views, double beta,
                                        DefaultMPolicy policy = DefaultMPolicy::Beta);

ImageInformation image_information(std::string image_id, std::span<const AugmentedView> views,
                                   const ScoringOptions& options);

// Builds the views for one image (mapping the original predictions into each
// requested augmentation) and scores it. Predictions are used as given; apply
// `retain` beforehand. Throws IncompleteInputError if an augmentation is missing.
std::vector<AugmentedView> build_views(const ImagePredictions& image,
                                       std::span<const AugmentationSpec> augmentations);

}  // namespace cald

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "cald/geometry.hpp"

namespace cald {

// One detection: a box plus per-class confidences indexed by dataset class id.
struct PredictionRecord {
  BoundingBox box;
  std::vector<double> scores;

  double max_score() const noexcept;
  std::size_t top_class() const noexcept;
};

// Detector output on one augmented copy, already in the augmented frame.
struct AugmentedPredictions {
  AugmentationSpec aug;
  std::vector<PredictionRecord> predictions;
};

// Everything the detector produced for one image.
struct ImagePredictions {
  std::string image_id;
  ImageSize size;
  std::vector<PredictionRecord> original;
  std::vector<AugmentedPredictions> augmented;

  const AugmentedPredictions* find(const AugmentationSpec& aug) const noexcept;
};

// Checks every confidence lies in [0, 1] and the vector has `num_classes` entries.
void validate_scores(std::span<const double> scores, std::size_t num_classes);

// Drops detections whose highest confidence is below `threshold`.
std::vector<PredictionRecord> retain(std::span<const PredictionRecord> preds, double threshold);

// Maps reference predictions into the augmented frame, inheriting the scores.
// Records whose box degenerates under the mapping are omitted.
std::vector<PredictionRecord> map_predictions(std::span<const PredictionRecord> preds,
                                              const AugmentationSpec& aug,
                                              const ImageSize& size);

}  // namespace cald

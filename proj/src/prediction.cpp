// SPDX-License-Identifier: Apache-2.0
#include "cald/prediction.hpp"

#include <algorithm>
#include <cmath>

#include "cald/errors.hpp"

namespace cald {

double PredictionRecord::max_score() const noexcept {
  return scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
}

std::size_t PredictionRecord::top_class() const noexcept {
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) -
                                  scores.begin());
}

const AugmentedPredictions* ImagePredictions::find(const AugmentationSpec& aug) const noexcept {
  for (const auto& a : augmented) {
    if (a.aug == aug) return &a;
  }
  return nullptr;
}

void validate_scores(std::span<const double> scores, std::size_t num_classes) {
  if (scores.size() != num_classes) {
    throw ConfigError("score vector has " + std::to_string(scores.size()) + " entries, expected " +
                      std::to_string(num_classes));
  }
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ConfigError("confidence " + std::to_string(s) + " outside [0, 1]");
    }
  }
}

std::vector<PredictionRecord> retain(std::span<const PredictionRecord> preds, double threshold) {
  std::vector<PredictionRecord> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    if (p.max_score() >= threshold && p.max_score() > 0.0) out.push_back(p);
  }
  return out;
}

std::vector<PredictionRecord> map_predictions(std::span<const PredictionRecord> preds,
                                              const AugmentationSpec& aug,
                                              const ImageSize& size) {
  std::vector<PredictionRecord> out;
  out.reserve(preds.size());
  for (const auto& p : preds) {
    if (auto box = try_map_box(p.box, aug, size)) out.push_back({*box, p.scores});
  }
  return out;
}

}  // namespace cald

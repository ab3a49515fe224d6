// SPDX-License-Identifier: Apache-2.0
#include "cald/class_distribution.hpp"

#include <algorithm>
#include <cmath>

#include "cald/consistency.hpp"
#include "cald/errors.hpp"

namespace cald {

ClassDistribution::ClassDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw InvalidDistributionError("class distribution has a negative entry");
    total += p;
  }
  if (probs_.empty() || std::abs(total - 1.0) > 1e-9) {
    throw InvalidDistributionError("class distribution sums to " + std::to_string(total));
  }
}

ClassDistribution ClassDistribution::uniform(std::size_t num_classes) {
  if (num_classes == 0) throw ConfigError("class count must be positive");
  return ClassDistribution(std::vector<double>(num_classes, 1.0 / static_cast<double>(num_classes)));
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

ClassDistribution labeled_pool_distribution(std::span<const std::int64_t> counts,
                                            CountMode mode) {
  std::int64_t total = 0;
  for (auto c : counts) {
    if (c < 0) throw ConfigError("label counts must be non-negative");
    total += c;
  }
  if (total == 0) throw EmptyPoolError("labeled pool contains no objects");
  std::vector<double> logits(counts.begin(), counts.end());
  if (mode == CountMode::NormalizedCounts) {
    for (double& v : logits) v /= static_cast<double>(total);
  }
  return ClassDistribution(softmax(logits));
}

ClassDistribution unlabeled_image_distribution(std::span<const PredictionRecord> original,
                                               std::span<const AugmentedPredictions> augmented,
                                               std::size_t num_classes) {
  std::vector<double> from_original(num_classes, 0.0);
  std::vector<double> from_augmented(num_classes, 0.0);
  auto take_max = [num_classes](std::vector<double>& acc, const PredictionRecord& p) {
    if (p.scores.size() != num_classes) {
      throw ConfigError("prediction has " + std::to_string(p.scores.size()) +
                        " class scores, expected " + std::to_string(num_classes));
    }
    for (std::size_t m = 0; m < num_classes; ++m) acc[m] = std::max(acc[m], p.scores[m]);
  };
  for (const auto& p : original) take_max(from_original, p);
  for (const auto& a : augmented) {
    for (const auto& p : a.predictions) take_max(from_augmented, p);
  }
  std::vector<double> delta(num_classes);
  for (std::size_t m = 0; m < num_classes; ++m) delta[m] = from_original[m] + from_augmented[m];
  return ClassDistribution(softmax(delta));
}

double mutual_information(const ClassDistribution& image, const ClassDistribution& pool) {
  return js_divergence(image.probs(), pool.probs());
}

std::vector<RankedCandidate> rank_by_mutual_information(std::span<const Candidate> pool_candidates,
                                                        const ClassDistribution& pool) {
  std::vector<RankedCandidate> ranked;
  ranked.reserve(pool_candidates.size());
  for (const auto& c : pool_candidates) {
    ranked.push_back({c.image_id, mutual_information(c.distribution, pool)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.js != b.js) return a.js > b.js;
    return a.image_id < b.image_id;
  });
  return ranked;
}

std::vector<std::string> select_by_mutual_information(std::span<const Candidate> pool_candidates,
                                                      const ClassDistribution& pool,
                                                      std::size_t budget) {
  if (budget > pool_candidates.size()) {
    throw InsufficientCandidatesError(budget, pool_candidates.size());
  }
  auto ranked = rank_by_mutual_information(pool_candidates, pool);
  std::vector<std::string> out;
  out.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) out.push_back(std::move(ranked[i].image_id));
  return out;
}

}  // namespace cald

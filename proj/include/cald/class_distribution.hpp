// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cald/prediction.hpp"

namespace cald {

// Object instances per class, indexed by dataset class id.
using LabelCounts = std::vector<std::int64_t>;

// Probability vector over every dataset class, including never-seen ones.
class ClassDistribution {
 public:
  ClassDistribution() = default;
  // Throws InvalidDistributionError unless entries are >= 0 and sum to 1 within 1e-9.
  explicit ClassDistribution(std::vector<double> probs);

  static ClassDistribution uniform(std::size_t num_classes);

  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

// How labeled-pool counts enter the softmax. RawCounts is the default and
// saturates once counts differ by a few tens; NormalizedCounts divides by the
// total first.
enum class CountMode { RawCounts, NormalizedCounts };

// Numerically stable softmax (max-subtracted).
std::vector<double> softmax(std::span<const double> logits);

// Throws EmptyPoolError when every count is zero.
ClassDistribution labeled_pool_distribution(std::span<const std::int64_t> counts,
                                            CountMode mode = CountMode::RawCounts);

// Per class, the highest confidence among the original predictions plus the
// highest among all augmented predictions (pooled over augmentations), then softmax.
ClassDistribution unlabeled_image_distribution(std::span<const PredictionRecord> original,
                                               std::span<const AugmentedPredictions> augmented,
                                               std::size_t num_classes);

// JS divergence between an image's class distribution and the labeled pool's.
double mutual_information(const ClassDistribution& image, const ClassDistribution& pool);

struct Candidate {
  std::string image_id;
  ClassDistribution distribution;
};

struct RankedCandidate {
  std::string image_id;
  double js;
};

// Every candidate with its divergence from the pool, most divergent first,
// ties by image id ascending.
std::vector<RankedCandidate> rank_by_mutual_information(std::span<const Candidate> pool_candidates,
                                                        const ClassDistribution& pool);

// Greedy selection with the pool distribution held fixed, which reduces to
// taking the `budget` most divergent candidates. Output is in selection order.
// Throws InsufficientCandidatesError when budget exceeds the candidate count.
std::vector<std::string> select_by_mutual_information(std::span<const Candidate> pool_candidates,
                                                      const ClassDistribution& pool,
                                                      std::size_t budget);

}  // namespace cald

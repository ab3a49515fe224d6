// SPDX-License-Identifier: Apache-2.0
#include "cald/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cald/errors.hpp"
#include "cald/parallel.hpp"
#include "cald/rng.hpp"

namespace cald {

std::vector<AugmentationSpec> default_augmentations() {
  return {AugmentationSpec::horizontal_flip(), AugmentationSpec::cutout(),
          AugmentationSpec::downsize(0.8), AugmentationSpec::rotation(5.0)};
}

void SelectionConfig::validate() const {
  scoring().validate();
  if (!(expansion_ratio >= 0.0) || !std::isfinite(expansion_ratio)) {
    throw ConfigError("expansion ratio must be a finite value >= 0");
  }
  if (cycles == 0) throw ConfigError("cycles must be positive");
  if (augmentations.empty()) throw ConfigError("at least one augmentation is required");
  for (const auto& a : augmentations) {
    a.validate();
    if (a.kind == AugmentationKind::Original) {
      throw ConfigError("'original' cannot be used as a scoring augmentation");
    }
  }
  if (!(retention_threshold >= 0.0 && retention_threshold <= 1.0)) {
    throw ConfigError("retention threshold must lie in [0, 1]");
  }
}

std::size_t SelectionConfig::initial_pool_size() const {
  // The small offset keeps products like 500 * 1.2 from rounding up to 601.
  const double target = static_cast<double>(budget_per_cycle) * (1.0 + expansion_ratio);
  return static_cast<std::size_t>(std::ceil(target - 1e-9));
}

LabelCounts PoolState::labeled_counts() const {
  LabelCounts total(num_classes, 0);
  for (const auto& [id, counts] : labeled) {
    for (std::size_t c = 0; c < num_classes && c < counts.size(); ++c) total[c] += counts[c];
  }
  return total;
}

std::vector<std::string> random_baseline(const PoolState& pool, std::size_t budget,
                                         std::uint64_t seed) {
  if (budget > pool.unlabeled.size()) {
    throw InsufficientCandidatesError(budget, pool.unlabeled.size());
  }
  std::vector<std::string> ids(pool.unlabeled.begin(), pool.unlabeled.end());
  Rng rng(derive_seed(seed, "random_baseline"));
  for (std::size_t i = 0; i < budget; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(ids.size() - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(budget);
  return ids;
}

PoolState make_initial_pool(std::span<const std::string> image_ids, std::size_t num_classes,
                            std::size_t initial_size, const LabelOracle& oracle,
                            std::uint64_t seed) {
  PoolState pool;
  pool.num_classes = num_classes;
  pool.unlabeled.insert(image_ids.begin(), image_ids.end());
  for (const auto& id : random_baseline(pool, initial_size, seed)) {
    pool.labeled.emplace(id, oracle.label(id));
    pool.unlabeled.erase(id);
  }
  return pool;
}

std::vector<ScoredImage> score_images(std::span<const std::string> ids,
                                      const PredictionSource& source, std::size_t num_classes,
                                      const SelectionConfig& config, std::size_t jobs) {
  config.validate();
  const auto options = config.scoring();
  std::vector<std::optional<ScoredImage>> slots(ids.size());
  std::vector<char> missing(ids.size(), 0);
  parallel_for(ids.size(), jobs, [&](std::size_t i) {
    auto found = source.find(ids[i]);
    if (!found) {
      missing[i] = 1;
      return;
    }
    ImagePredictions image = std::move(*found);
    image.original = retain(image.original, config.retention_threshold);
    for (const auto& aug : config.augmentations) {
      if (image.find(aug) == nullptr) {
        missing[i] = 1;
        return;
      }
    }
    for (auto& a : image.augmented) a.predictions = retain(a.predictions, config.retention_threshold);
    const auto views = build_views(image, config.augmentations);
    std::vector<AugmentedPredictions> used;
    for (const auto& aug : config.augmentations) used.push_back(*image.find(aug));
    slots[i] = ScoredImage{image_information(ids[i], views, options),
                           unlabeled_image_distribution(image.original, used, num_classes)};
  });
  std::vector<std::string> absent;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (missing[i]) absent.push_back(ids[i]);
  }
  if (!absent.empty()) throw IncompleteInputError("missing predictions", std::move(absent));
  std::vector<ScoredImage> out;
  out.reserve(ids.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::vector<std::string> stage_one(std::span<const ImageInformation> scores,
                                   const SelectionConfig& config) {
  std::vector<const ImageInformation*> order;
  order.reserve(scores.size());
  for (const auto& s : scores) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const ImageInformation* a, const ImageInformation* b) {
    if (a->metric != b->metric) return a->metric < b->metric;
    return a->image_id < b->image_id;
  });
  const std::size_t n = std::min(config.initial_pool_size(), order.size());
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(order[i]->image_id);
  return out;
}

CycleRecord plan_cycle(const PoolState& pool, const PredictionSource& source,
                       const SelectionConfig& config, std::size_t jobs) {
  const std::vector<std::string> ids(pool.unlabeled.begin(), pool.unlabeled.end());
  const auto scored = score_images(ids, source, pool.num_classes, config, jobs);

  std::vector<ImageInformation> infos;
  infos.reserve(scored.size());
  std::map<std::string, const ScoredImage*> by_id;
  for (const auto& s : scored) {
    infos.push_back(s.info);
    by_id.emplace(s.info.image_id, &s);
  }
  const auto initial = stage_one(infos, config);

  // An empty labeled pool has no class distribution; every candidate is then
  // compared against the uniform one.
  const auto counts = pool.labeled_counts();
  const bool has_objects =
      std::any_of(counts.begin(), counts.end(), [](std::int64_t c) { return c > 0; });
  const ClassDistribution pool_dist = has_objects
                                          ? labeled_pool_distribution(counts, config.count_mode)
                                          : ClassDistribution::uniform(pool.num_classes);

  std::vector<Candidate> candidates;
  candidates.reserve(initial.size());
  for (const auto& id : initial) candidates.push_back({id, by_id.at(id)->distribution});
  const auto ranked = rank_by_mutual_information(candidates, pool_dist);
  std::map<std::string, double> js_by_id;
  for (const auto& r : ranked) js_by_id.emplace(r.image_id, r.js);

  CycleRecord record;
  record.cycle = pool.cycle_index + 1;
  for (const auto& id : initial) {
    record.initial.push_back({id, by_id.at(id)->info.metric, js_by_id.at(id)});
  }
  const std::size_t budget = std::min(config.budget_per_cycle, ranked.size());
  for (std::size_t i = 0; i < budget; ++i) {
    const auto& id = ranked[i].image_id;
    record.final.push_back({id, by_id.at(id)->info.metric, ranked[i].js});
  }
  return record;
}

PoolState run_cycle(const PoolState& pool, const PredictionSource& source,
                    const LabelOracle& oracle, const SelectionConfig& config, std::size_t jobs) {
  if (pool.unlabeled.empty()) throw EmptyPoolError("unlabeled pool is empty");
  auto record = plan_cycle(pool, source, config, jobs);
  PoolState next = pool;
  for (const auto& entry : record.final) {
    next.labeled.emplace(entry.image_id, oracle.label(entry.image_id));
    next.unlabeled.erase(entry.image_id);
  }
  next.cycle_index = record.cycle;
  next.history.push_back(std::move(record));
  return next;
}

double beta_search(const std::function<double(double)>& evaluate, double step, int max_steps) {
  if (!(step > 0.0)) throw ConfigError("beta search step must be positive");
  if (max_steps < 1) throw ConfigError("beta search needs at least one step");
  constexpr double start = 1.0;
  // Positions are integer offsets from the start so repeated steps do not drift.
  std::map<int, double> cache;
  auto beta_at = [&](int k) { return start + k * step; };
  auto quality = [&](int k) {
    auto it = cache.find(k);
    if (it == cache.end()) it = cache.emplace(k, evaluate(beta_at(k))).first;
    return it->second;
  };
  auto admissible = [&](int k) { return beta_at(k) > 0.0 && beta_at(k) < 2.0; };

  int k = 0;
  for (int s = 0; s < max_steps; ++s) {
    const double here = quality(k);
    int best = k;
    double best_q = here;
    for (int candidate : {k + 1, k - 1}) {
      if (admissible(candidate) && quality(candidate) > best_q) {
        best = candidate;
        best_q = quality(candidate);
      }
    }
    if (best == k) break;
    k = best;
  }
  return std::clamp(beta_at(k), std::nextafter(0.0, 1.0), std::nextafter(2.0, 0.0));
}

}  // namespace cald

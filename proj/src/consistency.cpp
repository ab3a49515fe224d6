// SPDX-License-Identifier: Apache-2.0
#include "cald/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cald/errors.hpp"

namespace cald {

std::vector<double> normalize(std::span<const double> scores) {
  double total = 0.0;
  for (double s : scores) total += s;
  if (!(total > 0.0)) throw EmptyScoreError("cannot normalize a score vector that sums to zero");
  std::vector<double> out(scores.begin(), scores.end());
  for (double& s : out) s /= total;
  return out;
}

namespace {

void check_distribution(std::span<const double> p) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvalidDistributionError("distribution has a negative or NaN entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw InvalidDistributionError("distribution sums to " + std::to_string(total) + ", not 1");
  }
}

// p * log2(p / m), with the 0 log 0 = 0 convention.
double kl_term(double p, double m) { return p > 0.0 ? p * std::log2(p / m) : 0.0; }

// Sums in sorted order so the result does not depend on input ordering.
double stable_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  // Rounding can push the mean one ulp past the extremes.
  return std::clamp(mean, values.front(), values.back());
}

}  // namespace

double js_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw InvalidDistributionError("distributions differ in length (" + std::to_string(p.size()) +
                                   " vs " + std::to_string(q.size()) + ")");
  }
  check_distribution(p);
  check_distribution(q);
  double js = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    js += 0.5 * kl_term(p[i], m) + 0.5 * kl_term(q[i], m);
  }
  return std::clamp(js, 0.0, 1.0);
}

std::optional<Match> match_prediction(const BoundingBox& ref_box,
                                      std::span<const PredictionRecord> candidates) {
  std::optional<Match> best;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const double v = iou(ref_box, candidates[j].box);
    if (v > 0.0 && (!best || v > best->iou)) best = Match{j, v};
  }
  return best;
}

ConsistencyRecord pair_consistency(const PredictionRecord& ref, const PredictionRecord& cor) {
  ConsistencyRecord rec;
  rec.c_box = iou(ref.box, cor.box);
  const double weight = 0.5 * (ref.max_score() + cor.max_score());
  const double js = js_divergence(normalize(ref.scores), normalize(cor.scores));
  rec.c_score = weight * (1.0 - js);
  rec.m = rec.c_box + rec.c_score;
  return rec;
}

void ScoringOptions::validate() const {
  if (!(beta >= 0.0 && beta <= 2.0)) {
    throw ConfigError("beta must lie in [0, 2], got " + std::to_string(beta));
  }
}

namespace {

std::vector<double> reference_distances(const AugmentedView& view, double beta) {
  std::vector<double> out;
  out.reserve(view.references.size());
  for (const auto& ref : view.references) {
    double m = 0.0;
    if (auto match = match_prediction(ref.box, view.predictions)) {
      m = pair_consistency(ref, view.predictions[match->index]).m;
    }
    out.push_back(std::abs(m - beta));
  }
  return out;
}

template <class Reduce>
ImageInformation score_views(std::string image_id, std::span<const AugmentedView> views,
                             double beta, DefaultMPolicy policy, Reduce reduce) {
  ScoringOptions{beta, MetricVariant::Min, policy}.validate();
  const double fallback = policy == DefaultMPolicy::Beta ? beta : 0.0;
  ImageInformation info;
  info.image_id = std::move(image_id);
  info.no_references = true;
  std::vector<double> values;
  for (const auto& view : views) {
    auto distances = reference_distances(view, beta);
    double v = fallback;
    if (!distances.empty()) {
      info.no_references = false;
      v = reduce(std::move(distances));
    }
    info.per_augmentation.emplace_back(view.aug, v);
    values.push_back(v);
  }
  info.metric = values.empty() ? fallback : stable_mean(std::move(values));
  if (views.empty()) info.no_references = true;
  return info;
}

}  // namespace

ImageInformation image_information(std::string image_id, std::span<const AugmentedView> views,
                                   double beta, DefaultMPolicy policy) {
  return score_views(std::move(image_id), views, beta, policy, [](std::vector<double> d) {
    return *std::min_element(d.begin(), d.end());
  });
}

ImageInformation image_information_mean(std::string image_id,
                                        std::span<const AugmentedView> views, double beta,
                                        DefaultMPolicy policy) {
  return score_views(std::move(image_id), views, beta, policy,
                     [](std::vector<double> d) { return stable_mean(std::move(d)); });
}

ImageInformation image_information(std::string image_id, std::span<const AugmentedView> views,
                                   const ScoringOptions& options) {
  return options.variant == MetricVariant::Min
             ? image_information(std::move(image_id), views, options.beta, options.default_m)
             : image_information_mean(std::move(image_id), views, options.beta,
                                      options.default_m);
}

std::vector<AugmentedView> build_views(const ImagePredictions& image,
                                       std::span<const AugmentationSpec> augmentations) {
  std::vector<AugmentedView> views;
  views.reserve(augmentations.size());
  for (const auto& aug : augmentations) {
    const auto* preds = image.find(aug);
    if (preds == nullptr) {
      throw IncompleteInputError("missing '" + std::string(aug.tag()) + "' predictions",
                                 {image.image_id});
    }
    views.push_back({aug, map_predictions(image.original, aug, image.size), preds->predictions});
  }
  return views;
}

}  // namespace cald

// SPDX-License-Identifier: Apache-2.0
#include "cald/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "cald/consistency.hpp"
#include "cald/errors.hpp"
#include "cald/rng.hpp"

namespace cald::sim {

const SimImage& SimWorld::image(const std::string& image_id) const {
  auto it = index_.find(image_id);
  if (it == index_.end()) throw ConfigError("image '" + image_id + "' is not in the simulated world");
  return images[it->second];
}

std::vector<std::string> SimWorld::image_ids() const {
  std::vector<std::string> ids;
  ids.reserve(images.size());
  for (const auto& img : images) ids.push_back(img.image_id);
  return ids;
}

LabelCounts SimWorld::counts(const std::string& image_id) const {
  LabelCounts out(num_classes, 0);
  for (const auto& obj : image(image_id).objects) ++out[obj.class_id];
  return out;
}

DatasetManifest SimWorld::manifest(std::span<const AugmentationSpec> augmentations) const {
  DatasetManifest m;
  for (std::size_t c = 0; c < num_classes; ++c) m.class_names.push_back("class_" + std::to_string(c));
  m.image_ids = image_ids();
  for (const auto& a : augmentations) m.augmentations.emplace(std::string(a.tag()), a);
  return m;
}

SimWorld generate_world(std::size_t num_images, std::size_t num_classes,
                        double imbalance_exponent, std::uint64_t seed) {
  if (num_images == 0 || num_classes == 0) throw ConfigError("world needs images and classes");
  if (!(imbalance_exponent >= 0.0)) throw ConfigError("imbalance exponent must be >= 0");
  SimWorld world;
  world.num_classes = num_classes;
  world.class_frequencies.resize(num_classes);
  double total = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    world.class_frequencies[c] = std::pow(static_cast<double>(c + 1), -imbalance_exponent);
    total += world.class_frequencies[c];
  }
  std::vector<double> cumulative(num_classes);
  double running = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    world.class_frequencies[c] /= total;
    running += world.class_frequencies[c];
    cumulative[c] = running;
  }

  world.images.reserve(num_images);
  for (std::size_t i = 0; i < num_images; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    char id[32];
    std::snprintf(id, sizeof id, "img_%05zu", i);
    const ImageSize size(320 + static_cast<int>(rng.below(321)), 240 + static_cast<int>(rng.below(241)));
    SimImage img{id, size, {}};
    const auto count = 1 + rng.below(5);
    for (std::uint64_t k = 0; k < count; ++k) {
      const double u = rng.uniform();
      const auto c = static_cast<std::size_t>(
          std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      const double w = std::round(rng.uniform(0.1, 0.4) * size.width);
      const double h = std::round(rng.uniform(0.1, 0.4) * size.height);
      const double x = std::round(rng.uniform(0.0, size.width - w));
      const double y = std::round(rng.uniform(0.0, size.height - h));
      img.objects.push_back({std::min(c, num_classes - 1), BoundingBox(x, y, x + w, y + h)});
    }
    world.index_.emplace(img.image_id, world.images.size());
    world.images.push_back(std::move(img));
  }
  return world;
}

SimDetectorModel SimDetectorModel::from_counts(std::span<const std::int64_t> labeled_counts,
                                               const DetectorParams& params) {
  if (!(params.kappa > 0.0)) throw ConfigError("kappa must be positive");
  SimDetectorModel model;
  model.params = params;
  for (auto n : labeled_counts) {
    const double count = static_cast<double>(std::max<std::int64_t>(n, 0));
    model.skill.push_back(count / (count + params.kappa));
  }
  return model;
}

SimDetectorModel SimDetectorModel::uniform(std::size_t num_classes, double skill,
                                           const DetectorParams& params) {
  if (!(skill >= 0.0 && skill <= 1.0)) throw ConfigError("skill must lie in [0, 1]");
  return {std::vector<double>(num_classes, skill), params};
}

namespace {

// Occluding rectangle for a cutout view: the requested share of the image
// area, centred at a point drawn from the middle half of the frame.
BoundingBox cutout_region(const SimImage& image, const AugmentationSpec& aug, std::uint64_t seed) {
  Rng rng(derive_seed(derive_seed(seed, image.image_id), "cutout_region"));
  const double side = std::sqrt(std::max(aug.area_fraction, 1e-6));
  const double w = side * image.size.width;
  const double h = side * image.size.height;
  const double cx = rng.uniform(0.25, 0.75) * image.size.width;
  const double cy = rng.uniform(0.25, 0.75) * image.size.height;
  return {std::max(0.0, cx - w / 2), std::max(0.0, cy - h / 2),
          std::min<double>(image.size.width, cx + w / 2),
          std::min<double>(image.size.height, cy + h / 2)};
}

double covered_fraction(const BoundingBox& box, const BoundingBox& region) {
  const double iw = std::min(box.x_max(), region.x_max()) - std::max(box.x_min(), region.x_min());
  const double ih = std::min(box.y_max(), region.y_max()) - std::max(box.y_min(), region.y_min());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih / box.area();
}

std::vector<double> softened_scores(std::size_t num_classes, std::size_t label, double temperature) {
  std::vector<double> scores(num_classes, 0.0);
  if (temperature <= 0.0) {
    scores[label] = 1.0;
    return scores;
  }
  std::vector<double> logits(num_classes, 0.0);
  logits[label] = 1.0 / temperature;
  return softmax(logits);
}

}  // namespace

std::vector<PredictionRecord> simulate_detector(const SimWorld& world, const SimDetectorModel& model,
                                                const std::string& image_id,
                                                const AugmentationSpec& aug, std::uint64_t seed) {
  const SimImage& image = world.image(image_id);
  if (model.skill.size() != world.num_classes) {
    throw ConfigError("detector model class count does not match the world");
  }
  const ImageSize frame = mapped_size(image.size, aug);
  std::optional<BoundingBox> occluder;
  if (aug.kind == AugmentationKind::Cutout) occluder = cutout_region(image, aug, seed);

  Rng rng(derive_seed(derive_seed(seed, image_id), aug.tag()));
  std::vector<PredictionRecord> out;
  for (const auto& obj : image.objects) {
    // Fixed draw count per object keeps streams aligned across skill levels.
    const double u_detect = rng.uniform();
    const double n[4] = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    const double u_mis = rng.uniform();
    const double u_class = rng.uniform();

    const std::size_t c = obj.class_id;
    double p_detect = model.detection_probability(c);
    if (occluder) p_detect *= 1.0 - (1.0 - model.skill[c]) * covered_fraction(obj.box, *occluder);
    if (u_detect >= p_detect) continue;

    auto mapped = try_map_box(obj.box, aug, image.size);
    if (!mapped) continue;
    const double sx = model.jitter(c) * mapped->width();
    const double sy = model.jitter(c) * mapped->height();
    auto box = BoundingBox::make(std::clamp(mapped->x_min() + n[0] * sx, 0.0, double(frame.width)),
                                 std::clamp(mapped->y_min() + n[1] * sy, 0.0, double(frame.height)),
                                 std::clamp(mapped->x_max() + n[2] * sx, 0.0, double(frame.width)),
                                 std::clamp(mapped->y_max() + n[3] * sy, 0.0, double(frame.height)));
    if (!box) continue;

    std::size_t label = c;
    if (world.num_classes > 1 && u_mis < model.misclassification(c)) {
      const auto k = std::min(static_cast<std::size_t>(u_class * double(world.num_classes - 1)),
                              world.num_classes - 2);
      label = k >= c ? k + 1 : k;
    }
    out.push_back({*box, softened_scores(world.num_classes, label, model.temperature(c))});
  }
  return out;
}

ImagePredictions simulate_image(const SimWorld& world, const SimDetectorModel& model,
                                const std::string& image_id,
                                std::span<const AugmentationSpec> augmentations, std::uint64_t seed) {
  const SimImage& image = world.image(image_id);
  ImagePredictions out{image_id, image.size,
                       simulate_detector(world, model, image_id, AugmentationSpec::original(), seed),
                       {}};
  for (const auto& aug : augmentations) {
    out.augmented.push_back({aug, simulate_detector(world, model, image_id, aug, seed)});
  }
  return out;
}

double detection_error(const SimImage& image, std::span<const PredictionRecord> original) {
  if (image.objects.empty()) return 0.0;
  double iou_sum = 0.0;
  std::size_t wrong = 0;
  for (const auto& obj : image.objects) {
    auto match = match_prediction(obj.box, original);
    if (!match) {
      ++wrong;
      continue;
    }
    iou_sum += match->iou;
    if (original[match->index].top_class() != obj.class_id) ++wrong;
  }
  const double n = static_cast<double>(image.objects.size());
  return (1.0 - iou_sum / n) + static_cast<double>(wrong) / n;
}

double balance_js(std::span<const std::int64_t> counts) {
  std::int64_t total = 0;
  for (auto c : counts) total += c;
  if (total <= 0) throw EmptyPoolError("labeled pool contains no objects");
  std::vector<double> p;
  p.reserve(counts.size());
  for (auto c : counts) p.push_back(static_cast<double>(c) / static_cast<double>(total));
  return js_divergence(p, ClassDistribution::uniform(counts.size()).probs());
}

std::optional<ImagePredictions> SimPredictionSource::find(const std::string& image_id) const {
  return simulate_image(world_, model_, image_id, augs_, seed_);
}

Strategy Strategy::parse(const std::string& text) {
  if (text == "cald") return {StrategyKind::Cald, 1.3};
  if (text == "random") return {StrategyKind::Random, 1.3};
  if (text == "cald_mean_variant") return {StrategyKind::CaldMean, 1.3};
  constexpr std::string_view prefix = "cald_beta:";
  if (text.starts_with(prefix)) {
    const std::string_view rest = std::string_view(text).substr(prefix.size());
    double beta = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), beta);
    if (ec != std::errc{} || ptr != rest.data() + rest.size() || rest.empty()) {
      throw ConfigError("cannot parse beta in '" + text + "'");
    }
    if (!(beta >= 0.0 && beta <= 2.0)) throw ConfigError("beta must lie in [0, 2]");
    return {StrategyKind::CaldBeta, beta};
  }
  throw ConfigError("unknown strategy '" + text +
                    "' (valid: cald, random, cald_mean_variant, cald_beta:<beta>)");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::string Strategy::name() const {
  switch (kind) {
    case StrategyKind::Cald: return "cald";
    case StrategyKind::Random: return "random";
    case StrategyKind::CaldMean: return "cald_mean_variant";
    case StrategyKind::CaldBeta: return "cald_beta:" + format_double(beta);
  }
  return "cald";
}

SelectionConfig ExperimentConfig::default_selection() {
  SelectionConfig s;
  s.budget_per_cycle = 100;
  s.cycles = 3;
  return s;
}

namespace {

double mean_metric(std::span<const ScoredImage> scored) {
  if (scored.empty()) return 0.0;
  std::vector<double> values;
  for (const auto& s : scored) values.push_back(s.info.metric);
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

std::vector<MetricsRow> run_seed(const Strategy& strategy, const ExperimentConfig& config,
                                 std::uint64_t seed, std::size_t jobs) {
  SelectionConfig selection = config.selection;
  if (strategy.kind == StrategyKind::CaldMean) selection.metric_variant = MetricVariant::Mean;
  if (strategy.kind == StrategyKind::CaldBeta) selection.beta = strategy.beta;
  selection.validate();

  const SimWorld world =
      generate_world(config.num_images, config.num_classes, config.imbalance_exponent, seed);
  const SimOracle oracle(world);
  const auto ids = world.image_ids();
  PoolState pool = make_initial_pool(ids, world.num_classes,
                                     std::min(config.initial_labeled, ids.size()), oracle,
                                     derive_seed(seed, "initial_pool"));

  std::vector<MetricsRow> rows;
  for (std::size_t cycle = 1; cycle <= selection.cycles && !pool.unlabeled.empty(); ++cycle) {
    const SimPredictionSource source(world,
                                     SimDetectorModel::from_counts(pool.labeled_counts(), config.detector),
                                     selection.augmentations, derive_seed(seed, cycle));
    std::vector<std::string> labeled_ids;
    for (const auto& [id, counts] : pool.labeled) labeled_ids.push_back(id);
    const auto labeled_scores = score_images(labeled_ids, source, world.num_classes, selection, jobs);

    std::vector<std::string> selected;
    if (strategy.kind == StrategyKind::Random) {
      selected = random_baseline(pool, std::min(selection.budget_per_cycle, pool.unlabeled.size()),
                                 derive_seed(seed, "random_cycle_" + std::to_string(cycle)));
    } else {
      for (const auto& e : plan_cycle(pool, source, selection, jobs).final) selected.push_back(e.image_id);
    }
    const auto selected_scores = score_images(selected, source, world.num_classes, selection, jobs);

    MetricsRow row;
    row.strategy = strategy.name();
    row.seed = seed;
    row.cycle = cycle;
    double error = 0.0;
    for (const auto& id : selected) {
      const auto preds = retain(source.find(id)->original, selection.retention_threshold);
      error += detection_error(world.image(id), preds);
    }
    row.mean_error = selected.empty() ? 0.0 : error / static_cast<double>(selected.size());
    row.mean_m_selected = mean_metric(selected_scores);
    row.mean_m_labeled = mean_metric(labeled_scores);

    for (const auto& id : selected) {
      pool.labeled.emplace(id, oracle.label(id));
      pool.unlabeled.erase(id);
    }
    pool.cycle_index = cycle;
    row.balance_js = balance_js(pool.labeled_counts());
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<MetricsRow> run_experiment(const Strategy& strategy, const ExperimentConfig& config,
                                       std::span<const std::uint64_t> seeds, std::size_t jobs) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  std::vector<MetricsRow> rows;
  for (auto seed : seeds) {
    auto seed_rows = run_seed(strategy, config, seed, jobs);
    rows.insert(rows.end(), seed_rows.begin(), seed_rows.end());
  }
  return rows;
}

std::vector<SummaryRow> summarize(std::span<const MetricsRow> rows) {
  std::vector<std::pair<std::string, std::size_t>> order;
  std::map<std::pair<std::string, std::size_t>, std::vector<const MetricsRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.strategy, r.cycle);
    auto& group = groups[key];
    if (group.empty()) order.push_back(key);
    group.push_back(&r);
  }
  auto stats = [](const std::vector<const MetricsRow*>& g, double MetricsRow::*field) {
    double mean = 0.0;
    for (const auto* r : g) mean += r->*field;
    mean /= static_cast<double>(g.size());
    double var = 0.0;
    for (const auto* r : g) var += (r->*field - mean) * (r->*field - mean);
    const double sd = g.size() > 1 ? std::sqrt(var / static_cast<double>(g.size() - 1)) : 0.0;
    return std::make_pair(mean, sd);
  };
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    const auto& g = groups.at(key);
    SummaryRow s;
    s.strategy = key.first;
    s.cycle = key.second;
    s.seeds = g.size();
    std::tie(s.mean_error, s.sd_error) = stats(g, &MetricsRow::mean_error);
    std::tie(s.mean_balance, s.sd_balance) = stats(g, &MetricsRow::balance_js);
    std::tie(s.mean_m_selected, s.sd_m_selected) = stats(g, &MetricsRow::mean_m_selected);
    std::tie(s.mean_m_labeled, s.sd_m_labeled) = stats(g, &MetricsRow::mean_m_labeled);
    out.push_back(std::move(s));
  }
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
  out << "strategy,seed,cycle,mean_error,balance_js,mean_M_selected,mean_M_labeled\n";
  for (const auto& r : rows) {
    out << r.strategy << ',' << r.seed << ',' << r.cycle << ',' << format_double(r.mean_error) << ','
        << format_double(r.balance_js) << ',' << format_double(r.mean_m_selected) << ','
        << format_double(r.mean_m_labeled) << '\n';
  }
}

void write_summary(std::ostream& out, std::span<const SummaryRow> rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-22s %5s %5s  %-17s  %-17s  %-17s  %-17s\n", "strategy",
                "cycle", "seeds", "mean_error", "balance_js", "mean_M_selected", "mean_M_labeled");
  out << line;
  for (const auto& s : rows) {
    std::snprintf(line, sizeof line,
                  "%-22s %5zu %5zu  %.4f +- %.4f  %.4f +- %.4f  %.4f +- %.4f  %.4f +- %.4f\n",
                  s.strategy.c_str(), s.cycle, s.seeds, s.mean_error, s.sd_error, s.mean_balance,
                  s.sd_balance, s.mean_m_selected, s.sd_m_selected, s.mean_m_labeled,
                  s.sd_m_labeled);
    out << line;
  }
}

void export_dataset(const SimWorld& world, const SimDetectorModel& model,
                    std::span<const AugmentationSpec> augmentations, std::uint64_t seed,
                    std::span<const std::string> labeled_ids, std::ostream& manifest_out,
                    std::ostream& predictions_out, std::ostream& labels_out) {
  const auto manifest = world.manifest(augmentations);
  write_manifest(manifest_out, manifest);
  for (const auto& img : world.images) {
    write_predictions(predictions_out, simulate_image(world, model, img.image_id, augmentations, seed),
                      manifest);
  }
  for (const auto& id : labeled_ids) {
    std::vector<std::size_t> classes;
    for (const auto& obj : world.image(id).objects) classes.push_back(obj.class_id);
    write_labels(labels_out, id, classes, manifest);
  }
}

}  // namespace cald::sim

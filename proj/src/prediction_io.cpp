// SPDX-License-Identifier: Apache-2.0
#include "cald/prediction_io.hpp"

#include <istream>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "cald/errors.hpp"

namespace cald {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kSelectionFormat = "cald-selection";
constexpr int kSelectionVersion = 1;

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

json parse_line(const std::string& line, std::size_t lineno) {
  try {
    auto j = json::parse(line);
    if (!j.is_object()) throw ParseError(lineno, "expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
  }
}

template <class T>
T field(const json& j, const char* name, std::size_t lineno) {
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(lineno, std::string("missing field '") + name + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(lineno, std::string("field '") + name + "' has the wrong type");
  }
}

double number_param(const json& params, const char* name, double fallback) {
  auto it = params.find(name);
  if (it == params.end()) return fallback;
  if (!it->is_number()) throw ConfigError(std::string("augmentation parameter '") + name +
                                          "' must be a number");
  return it->get<double>();
}

AugmentationSpec augmentation_from_json(const std::string& tag, const json& params) {
  auto spec = AugmentationSpec::from_tag(tag);
  if (!params.is_object()) throw ConfigError("parameters for '" + tag + "' must be an object");
  spec.ratio = number_param(params, "ratio", spec.ratio);
  spec.angle_deg = number_param(params, "angle", spec.angle_deg);
  spec.area_fraction = number_param(params, "area_fraction", spec.area_fraction);
  spec.sigma = number_param(params, "sigma", spec.sigma);
  spec.amount = number_param(params, "amount", spec.amount);
  spec.validate();
  return spec;
}

ordered_json augmentation_params(const AugmentationSpec& a) {
  ordered_json j = ordered_json::object();
  switch (a.kind) {
    case AugmentationKind::Downsize: j["ratio"] = a.ratio; break;
    case AugmentationKind::Rotation: j["angle"] = a.angle_deg; break;
    case AugmentationKind::Cutout: j["area_fraction"] = a.area_fraction; break;
    case AugmentationKind::GaussianNoise: j["sigma"] = a.sigma; break;
    case AugmentationKind::SaltPepper: j["amount"] = a.amount; break;
    default: break;
  }
  return j;
}

const char* stage_name(bool initial) { return initial ? "initial" : "final"; }

}  // namespace

std::optional<std::size_t> DatasetManifest::class_index(const std::string& name) const {
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    if (class_names[i] == name) return i;
  }
  return std::nullopt;
}

AugmentationSpec DatasetManifest::augmentation(const std::string& tag) const {
  auto it = augmentations.find(tag);
  return it != augmentations.end() ? it->second : AugmentationSpec::from_tag(tag);
}

std::vector<AugmentationSpec> DatasetManifest::augmentation_set(const std::string& tags) const {
  std::vector<AugmentationSpec> out;
  std::set<char> seen;
  for (char c : tags) {
    if (!seen.insert(c).second) throw ConfigError(std::string("augmentation '") + c + "' repeated");
    out.push_back(augmentation(std::string(1, c)));
  }
  if (out.empty()) throw ConfigError("augmentation set is empty");
  return out;
}

DatasetManifest parse_manifest(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  DatasetManifest m;
  try {
    m.class_names = j.at("class_names").get<std::vector<std::string>>();
    if (j.contains("image_ids")) m.image_ids = j.at("image_ids").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest: ") + e.what());
  }
  if (m.class_names.empty()) throw DataError("manifest: class_names is empty");
  std::set<std::string> unique(m.class_names.begin(), m.class_names.end());
  if (unique.size() != m.class_names.size()) throw DataError("manifest: duplicate class name");
  for (const auto& name : m.class_names) {
    if (name.empty()) throw DataError("manifest: empty class name");
  }
  if (j.contains("augmentations")) {
    for (const auto& [tag, params] : j.at("augmentations").items()) {
      try {
        m.augmentations.emplace(tag, augmentation_from_json(tag, params));
      } catch (const ConfigError& e) {
        throw DataError(std::string("manifest: ") + e.what());
      }
    }
  }
  return m;
}

void write_manifest(std::ostream& out, const DatasetManifest& manifest) {
  ordered_json j;
  j["class_names"] = manifest.class_names;
  j["image_ids"] = manifest.image_ids;
  ordered_json augs = ordered_json::object();
  for (const auto& [tag, spec] : manifest.augmentations) augs[tag] = augmentation_params(spec);
  j["augmentations"] = augs;
  out << j.dump(2) << '\n';
}

std::optional<ImagePredictions> PredictionSet::find(const std::string& image_id) const {
  auto it = index_.find(image_id);
  if (it == index_.end()) return std::nullopt;
  return images_[it->second];
}

PredictionSet parse_predictions(std::istream& in, const DatasetManifest& manifest) {
  PredictionSet set;
  std::vector<char> has_original;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const json rec = parse_line(line, lineno);
    const auto image_id = field<std::string>(rec, "image_id", lineno);
    const auto tag = field<std::string>(rec, "augmentation", lineno);
    const auto width = field<int>(rec, "width", lineno);
    const auto height = field<int>(rec, "height", lineno);
    if (image_id.empty()) throw ParseError(lineno, "empty image_id");
    if (width < 1 || height < 1) throw ParseError(lineno, "width and height must be positive");
    AugmentationSpec aug;
    try {
      aug = manifest.augmentation(tag);
    } catch (const ConfigError& e) {
      throw ParseError(lineno, e.what());
    }
    if (!seen.emplace(image_id, tag).second) {
      throw DuplicateRecordError(lineno, "duplicate record for image '" + image_id +
                                             "', augmentation '" + tag + "'");
    }
    const ImageSize frame(width, height);

    std::vector<PredictionRecord> preds;
    auto dets = rec.find("detections");
    if (dets == rec.end() || !dets->is_array()) {
      throw ParseError(lineno, "missing or non-array field 'detections'");
    }
    for (const auto& det : *dets) {
      if (!det.is_object()) throw ParseError(lineno, "detection must be an object");
      const auto coords = field<std::vector<double>>(det, "box", lineno);
      if (coords.size() != 4) throw ParseError(lineno, "box must have 4 coordinates");
      auto box = BoundingBox::make(coords[0], coords[1], coords[2], coords[3]);
      if (!box) throw ParseError(lineno, "box must satisfy x_min < x_max and y_min < y_max");
      if (!box->within(frame)) throw ParseError(lineno, "box lies outside the image frame");
      auto scores_it = det.find("scores");
      if (scores_it == det.end() || !scores_it->is_object()) {
        throw ParseError(lineno, "missing or non-object field 'scores'");
      }
      std::vector<double> scores(manifest.num_classes(), 0.0);
      for (const auto& [name, value] : scores_it->items()) {
        auto idx = manifest.class_index(name);
        if (!idx) throw ParseError(lineno, "unknown class '" + name + "'");
        if (!value.is_number()) throw ParseError(lineno, "confidence for '" + name + "' is not a number");
        const double v = value.get<double>();
        if (!(v >= 0.0 && v <= 1.0)) {
          throw ParseError(lineno, "confidence " + value.dump() + " for '" + name + "' outside [0, 1]");
        }
        scores[*idx] = v;
      }
      preds.push_back({*box, std::move(scores)});
    }

    auto [it, inserted] = set.index_.emplace(image_id, set.images_.size());
    if (inserted) {
      set.images_.push_back({image_id, frame, {}, {}});
      has_original.push_back(0);
    }
    auto& image = set.images_[it->second];
    if (aug.kind == AugmentationKind::Original) {
      image.size = frame;
      image.original = std::move(preds);
      has_original[it->second] = 1;
    } else {
      image.augmented.push_back({aug, std::move(preds)});
    }
  }
  std::vector<std::string> incomplete;
  for (std::size_t i = 0; i < set.images_.size(); ++i) {
    if (!has_original[i]) incomplete.push_back(set.images_[i].image_id);
  }
  if (!incomplete.empty()) {
    throw IncompleteInputError("images without an 'original' record", std::move(incomplete));
  }
  return set;
}

namespace {

ordered_json detections_json(std::span<const PredictionRecord> preds,
                             const DatasetManifest& manifest) {
  ordered_json dets = ordered_json::array();
  for (const auto& p : preds) {
    ordered_json scores = ordered_json::object();
    for (std::size_t c = 0; c < p.scores.size() && c < manifest.num_classes(); ++c) {
      if (p.scores[c] > 0.0) scores[manifest.class_names[c]] = p.scores[c];
    }
    ordered_json det;
    det["box"] = {p.box.x_min(), p.box.y_min(), p.box.x_max(), p.box.y_max()};
    det["scores"] = std::move(scores);
    dets.push_back(std::move(det));
  }
  return dets;
}

void write_prediction_line(std::ostream& out, const std::string& image_id, std::string_view tag,
                           const ImageSize& size, std::span<const PredictionRecord> preds,
                           const DatasetManifest& manifest) {
  ordered_json j;
  j["image_id"] = image_id;
  j["augmentation"] = std::string(tag);
  j["width"] = size.width;
  j["height"] = size.height;
  j["detections"] = detections_json(preds, manifest);
  out << j.dump() << '\n';
}

}  // namespace

void write_predictions(std::ostream& out, const ImagePredictions& image,
                       const DatasetManifest& manifest) {
  write_prediction_line(out, image.image_id, "original", image.size, image.original, manifest);
  for (const auto& a : image.augmented) {
    write_prediction_line(out, image.image_id, a.aug.tag(), mapped_size(image.size, a.aug),
                          a.predictions, manifest);
  }
}

std::map<std::string, LabelCounts> parse_labels(std::istream& in,
                                                const DatasetManifest& manifest) {
  std::map<std::string, LabelCounts> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const json rec = parse_line(line, lineno);
    const auto image_id = field<std::string>(rec, "image_id", lineno);
    if (image_id.empty()) throw ParseError(lineno, "empty image_id");
    auto objects = rec.find("objects");
    if (objects == rec.end() || !objects->is_array()) {
      throw ParseError(lineno, "missing or non-array field 'objects'");
    }
    LabelCounts counts(manifest.num_classes(), 0);
    for (const auto& obj : *objects) {
      if (!obj.is_object()) throw ParseError(lineno, "object entry must be a JSON object");
      const auto name = field<std::string>(obj, "class", lineno);
      auto idx = manifest.class_index(name);
      if (!idx) throw ParseError(lineno, "unknown class '" + name + "'");
      ++counts[*idx];
    }
    if (!out.emplace(image_id, std::move(counts)).second) {
      throw DuplicateRecordError(lineno, "duplicate labels for image '" + image_id + "'");
    }
  }
  return out;
}

void write_labels(std::ostream& out, const std::string& image_id,
                  std::span<const std::size_t> classes, const DatasetManifest& manifest) {
  ordered_json j;
  j["image_id"] = image_id;
  ordered_json objects = ordered_json::array();
  for (auto c : classes) objects.push_back({{"class", manifest.class_names.at(c)}});
  j["objects"] = std::move(objects);
  out << j.dump() << '\n';
}

void write_selection(std::ostream& out, std::span<const CycleRecord> cycles) {
  ordered_json header;
  header["format"] = kSelectionFormat;
  header["version"] = kSelectionVersion;
  header["fields"] = {"cycle", "rank", "image_id", "metric_M", "js_mutual", "stage"};
  out << header.dump() << '\n';
  for (const auto& cycle : cycles) {
    for (bool initial : {true, false}) {
      const auto& entries = initial ? cycle.initial : cycle.final;
      std::size_t rank = 0;
      for (const auto& e : entries) {
        ordered_json row;
        row["cycle"] = cycle.cycle;
        row["rank"] = ++rank;
        row["image_id"] = e.image_id;
        row["metric_M"] = e.metric;
        row["js_mutual"] = e.js;
        row["stage"] = stage_name(initial);
        out << row.dump() << '\n';
      }
    }
  }
}

std::vector<CycleRecord> parse_selection(std::istream& in) {
  std::vector<CycleRecord> cycles;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const json rec = parse_line(line, lineno);
    if (!header_seen) {
      if (rec.value("format", "") != kSelectionFormat) {
        throw ParseError(lineno, "missing selection header");
      }
      if (rec.value("version", 0) != kSelectionVersion) {
        throw ParseError(lineno, "unsupported selection version");
      }
      header_seen = true;
      continue;
    }
    const auto cycle = field<std::size_t>(rec, "cycle", lineno);
    const auto rank = field<std::size_t>(rec, "rank", lineno);
    const auto stage = field<std::string>(rec, "stage", lineno);
    if (stage != "initial" && stage != "final") throw ParseError(lineno, "unknown stage '" + stage + "'");
    if (cycles.empty() || cycles.back().cycle != cycle) cycles.push_back({cycle, {}, {}});
    auto& entries = stage == "initial" ? cycles.back().initial : cycles.back().final;
    if (rank != entries.size() + 1) throw ParseError(lineno, "ranks must be contiguous from 1");
    entries.push_back({field<std::string>(rec, "image_id", lineno),
                       field<double>(rec, "metric_M", lineno),
                       field<double>(rec, "js_mutual", lineno)});
  }
  if (!header_seen) throw ParseError(lineno + 1, "missing selection header");
  return cycles;
}

void write_scores(std::ostream& out, std::span<const ImageInformation> scores) {
  for (const auto& s : scores) {
    ordered_json j;
    j["image_id"] = s.image_id;
    j["metric_M"] = s.metric;
    j["no_references"] = s.no_references;
    ordered_json per = ordered_json::object();
    for (const auto& [aug, value] : s.per_augmentation) per[std::string(aug.tag())] = value;
    j["per_augmentation"] = std::move(per);
    out << j.dump() << '\n';
  }
}

}  // namespace cald

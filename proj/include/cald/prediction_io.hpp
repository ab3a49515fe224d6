// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cald/class_distribution.hpp"
#include "cald/consistency.hpp"
#include "cald/pipeline.hpp"
#include "cald/prediction.hpp"

namespace cald {

// manifest.json:
//   {"class_names": [...], "image_ids": [...],
//    "augmentations": {"D": {"ratio": 0.8}, "R": {"angle": 5.0}, "C": {"area_fraction": 0.2},
//                      "G": {"sigma": 0.05}, "S": {"amount": 0.02}}}
// image_ids and augmentations are optional.
struct DatasetManifest {
  std::vector<std::string> class_names;
  std::vector<std::string> image_ids;
  std::map<std::string, AugmentationSpec> augmentations;  // by tag, defaults filled in

  std::size_t num_classes() const noexcept { return class_names.size(); }
  std::optional<std::size_t> class_index(const std::string& name) const;
  AugmentationSpec augmentation(const std::string& tag) const;

  // Resolves a compact tag string such as "FCDR" against the manifest parameters.
  std::vector<AugmentationSpec> augmentation_set(const std::string& tags) const;
};

DatasetManifest parse_manifest(std::istream& in);
void write_manifest(std::ostream& out, const DatasetManifest& manifest);

// Parsed predictions.jsonl, images in order of first appearance.
class PredictionSet final : public PredictionSource {
 public:
  std::optional<ImagePredictions> find(const std::string& image_id) const override;
  const std::vector<ImagePredictions>& images() const noexcept { return images_; }
  std::size_t size() const noexcept { return images_.size(); }

 private:
  friend PredictionSet parse_predictions(std::istream& in, const DatasetManifest& manifest);

  std::vector<ImagePredictions> images_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One record per line:
//   {"image_id": "...", "augmentation": "original"|"F"|..., "width": W, "height": H,
//    "detections": [{"box": [x0, y0, x1, y1], "scores": {"class": conf, ...}}, ...]}
// Errors carry the 1-based line number. Every image needs an "original" record.
PredictionSet parse_predictions(std::istream& in, const DatasetManifest& manifest);

// Writes one image's records (original first, then each augmented copy).
void write_predictions(std::ostream& out, const ImagePredictions& image,
                       const DatasetManifest& manifest);

// One record per line: {"image_id": "...", "objects": [{"class": "..."}, ...]}
std::map<std::string, LabelCounts> parse_labels(std::istream& in, const DatasetManifest& manifest);
void write_labels(std::ostream& out, const std::string& image_id, std::span<const std::size_t> classes,
                  const DatasetManifest& manifest);

// selection.jsonl: a header line, then one row per selected image
//   {"cycle", "rank", "image_id", "metric_M", "js_mutual", "stage": "initial"|"final"}
// with the initial rows of a cycle before its final rows.
void write_selection(std::ostream& out, std::span<const CycleRecord> cycles);
std::vector<CycleRecord> parse_selection(std::istream& in);

// Score report: one line per image, {"image_id", "metric_M", "no_references", "per_augmentation"}.
void write_scores(std::ostream& out, std::span<const ImageInformation> scores);

}  // namespace cald

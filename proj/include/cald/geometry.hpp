// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cald {

struct ImageSize {
  int width = 1;
  int height = 1;

  ImageSize() = default;
  ImageSize(int w, int h);

  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Axis-aligned box in pixel coordinates. Construction rejects empty or
// non-finite boxes, so every live BoundingBox has positive area.
class BoundingBox {
 public:
  BoundingBox(double x_min, double y_min, double x_max, double y_max);

  double x_min() const noexcept { return x_min_; }
  double y_min() const noexcept { return y_min_; }
  double x_max() const noexcept { return x_max_; }
  double y_max() const noexcept { return y_max_; }
  double width() const noexcept { return x_max_ - x_min_; }
  double height() const noexcept { return y_max_ - y_min_; }
  double area() const noexcept { return width() * height(); }

  bool within(const ImageSize& size) const noexcept;
  bool contains(const BoundingBox& other, double tol = 0.0) const noexcept;

  // Returns nullopt instead of throwing when the coordinates do not form a valid box.
  static std::optional<BoundingBox> make(double x_min, double y_min, double x_max, double y_max);

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  double x_min_, y_min_, x_max_, y_max_;
};

enum class AugmentationKind {
  Original,
  HorizontalFlip,
  Cutout,
  Downsize,
  Rotation,
  GaussianNoise,
  SaltPepper,
};

// One augmentation with its parameters. Only Downsize and Rotation move boxes;
// the remaining parameters are carried for the external image pipeline and
// the simulator.
struct AugmentationSpec {
  AugmentationKind kind = AugmentationKind::Original;
  double ratio = 1.0;          // Downsize, in (0, 1]
  double angle_deg = 0.0;      // Rotation, in (-180, 180]
  double area_fraction = 0.2;  // Cutout
  double sigma = 0.05;         // GaussianNoise
  double amount = 0.02;        // SaltPepper

  static AugmentationSpec original();
  static AugmentationSpec horizontal_flip();
  static AugmentationSpec cutout(double area_fraction = 0.2);
  static AugmentationSpec downsize(double ratio = 0.8);
  static AugmentationSpec rotation(double angle_deg = 5.0);
  static AugmentationSpec gaussian_noise(double sigma = 0.05);
  static AugmentationSpec salt_pepper(double amount = 0.02);

  // Default parameters for a one-letter tag ("F", "C", "D", "R", "G", "S") or "original".
  static AugmentationSpec from_tag(std::string_view tag);

  std::string_view tag() const noexcept;
  void validate() const;

  friend bool operator==(const AugmentationSpec&, const AugmentationSpec&) = default;
};

double iou(const BoundingBox& a, const BoundingBox& b) noexcept;

// Frame size of the augmented image. Only Downsize changes it.
ImageSize mapped_size(const ImageSize& size, const AugmentationSpec& aug);

BoundingBox scale_box(const BoundingBox& b, double factor);

// Transports a box from the original frame into the augmented frame.
// Rotation takes the axis-aligned hull of the rotated corners and clips it to
// the frame. try_map_box returns nullopt when clipping leaves nothing;
// map_box throws DegenerateMappingError in that case. Both require the input
// box to lie within `size`.
std::optional<BoundingBox> try_map_box(const BoundingBox& b, const AugmentationSpec& aug,
                                       const ImageSize& size);
BoundingBox map_box(const BoundingBox& b, const AugmentationSpec& aug, const ImageSize& size);

}  // namespace cald

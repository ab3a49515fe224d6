// SPDX-License-Identifier: Apache-2.0
#include "cald/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "cald/errors.hpp"

namespace cald {

ImageSize::ImageSize(int w, int h) : width(w), height(h) {
  if (w < 1 || h < 1) {
    throw ConfigError("image size must be at least 1x1, got " + std::to_string(w) + "x" +
                      std::to_string(h));
  }
}

namespace {

bool valid_box(double x0, double y0, double x1, double y1) {
  return std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) && std::isfinite(y1) &&
         x0 < x1 && y0 < y1;
}

}  // namespace

BoundingBox::BoundingBox(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  if (!valid_box(x_min, y_min, x_max, y_max)) {
    throw ConfigError("invalid bounding box (" + std::to_string(x_min) + ", " +
                      std::to_string(y_min) + ", " + std::to_string(x_max) + ", " +
                      std::to_string(y_max) + ")");
  }
}

std::optional<BoundingBox> BoundingBox::make(double x_min, double y_min, double x_max,
                                             double y_max) {
  if (!valid_box(x_min, y_min, x_max, y_max)) return std::nullopt;
  return BoundingBox(x_min, y_min, x_max, y_max);
}

bool BoundingBox::within(const ImageSize& size) const noexcept {
  return x_min_ >= 0.0 && y_min_ >= 0.0 && x_max_ <= size.width && y_max_ <= size.height;
}

bool BoundingBox::contains(const BoundingBox& o, double tol) const noexcept {
  return x_min_ <= o.x_min_ + tol && y_min_ <= o.y_min_ + tol && x_max_ >= o.x_max_ - tol &&
         y_max_ >= o.y_max_ - tol;
}

AugmentationSpec AugmentationSpec::original() { return {}; }

AugmentationSpec AugmentationSpec::horizontal_flip() {
  AugmentationSpec a;
  a.kind = AugmentationKind::HorizontalFlip;
  return a;
}

AugmentationSpec AugmentationSpec::cutout(double area_fraction) {
  AugmentationSpec a;
  a.kind = AugmentationKind::Cutout;
  a.area_fraction = area_fraction;
  a.validate();
  return a;
}

AugmentationSpec AugmentationSpec::downsize(double ratio) {
  AugmentationSpec a;
  a.kind = AugmentationKind::Downsize;
  a.ratio = ratio;
  a.validate();
  return a;
}

AugmentationSpec AugmentationSpec::rotation(double angle_deg) {
  AugmentationSpec a;
  a.kind = AugmentationKind::Rotation;
  a.angle_deg = angle_deg;
  a.validate();
  return a;
}

AugmentationSpec AugmentationSpec::gaussian_noise(double sigma) {
  AugmentationSpec a;
  a.kind = AugmentationKind::GaussianNoise;
  a.sigma = sigma;
  a.validate();
  return a;
}

AugmentationSpec AugmentationSpec::salt_pepper(double amount) {
  AugmentationSpec a;
  a.kind = AugmentationKind::SaltPepper;
  a.amount = amount;
  a.validate();
  return a;
}

AugmentationSpec AugmentationSpec::from_tag(std::string_view tag) {
  if (tag == "original") return original();
  if (tag == "F") return horizontal_flip();
  if (tag == "C") return cutout();
  if (tag == "D") return downsize();
  if (tag == "R") return rotation();
  if (tag == "G") return gaussian_noise();
  if (tag == "S") return salt_pepper();
  throw ConfigError("unknown augmentation tag '" + std::string(tag) +
                    "' (expected original, F, C, D, R, G or S)");
}

std::string_view AugmentationSpec::tag() const noexcept {
  switch (kind) {
    case AugmentationKind::Original: return "original";
    case AugmentationKind::HorizontalFlip: return "F";
    case AugmentationKind::Cutout: return "C";
    case AugmentationKind::Downsize: return "D";
    case AugmentationKind::Rotation: return "R";
    case AugmentationKind::GaussianNoise: return "G";
    case AugmentationKind::SaltPepper: return "S";
  }
  return "original";
}

void AugmentationSpec::validate() const {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ConfigError("downsize ratio must lie in (0, 1], got " + std::to_string(ratio));
  }
  if (!(angle_deg > -180.0 && angle_deg <= 180.0)) {
    throw ConfigError("rotation angle must lie in (-180, 180], got " + std::to_string(angle_deg));
  }
  if (!(area_fraction >= 0.0 && area_fraction <= 1.0)) {
    throw ConfigError("cutout area fraction must lie in [0, 1]");
  }
  if (!(sigma >= 0.0) || !(amount >= 0.0 && amount <= 1.0)) {
    throw ConfigError("noise parameters out of range");
  }
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double ih = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

ImageSize mapped_size(const ImageSize& size, const AugmentationSpec& aug) {
  if (aug.kind != AugmentationKind::Downsize) return size;
  // Rounded up so every scaled box still fits the frame.
  auto scaled = [&](int n) {
    return std::max(1, static_cast<int>(std::ceil(n * aug.ratio - 1e-9)));
  };
  return {scaled(size.width), scaled(size.height)};
}

BoundingBox scale_box(const BoundingBox& b, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw ConfigError("scale factor must be positive and finite");
  }
  return {b.x_min() * factor, b.y_min() * factor, b.x_max() * factor, b.y_max() * factor};
}

namespace {

std::optional<BoundingBox> rotate_box(const BoundingBox& b, double angle_deg,
                                      const ImageSize& size) {
  if (angle_deg == 0.0) return b;
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cx = size.width / 2.0;
  const double cy = size.height / 2.0;
  const std::array<std::array<double, 2>, 4> corners{{{b.x_min(), b.y_min()},
                                                      {b.x_max(), b.y_min()},
                                                      {b.x_min(), b.y_max()},
                                                      {b.x_max(), b.y_max()}}};
  double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
  for (const auto& [x, y] : corners) {
    const double dx = x - cx;
    const double dy = y - cy;
    const double rx = cx + dx * c - dy * s;
    const double ry = cy + dx * s + dy * c;
    x0 = std::min(x0, rx);
    y0 = std::min(y0, ry);
    x1 = std::max(x1, rx);
    y1 = std::max(y1, ry);
  }
  return BoundingBox::make(std::max(x0, 0.0), std::max(y0, 0.0),
                           std::min(x1, static_cast<double>(size.width)),
                           std::min(y1, static_cast<double>(size.height)));
}

}  // namespace

std::optional<BoundingBox> try_map_box(const BoundingBox& b, const AugmentationSpec& aug,
                                       const ImageSize& size) {
  if (!b.within(size)) {
    throw ConfigError("box lies outside the " + std::to_string(size.width) + "x" +
                      std::to_string(size.height) + " frame");
  }
  switch (aug.kind) {
    case AugmentationKind::HorizontalFlip:
      return BoundingBox(size.width - b.x_max(), b.y_min(), size.width - b.x_min(), b.y_max());
    case AugmentationKind::Downsize:
      return scale_box(b, aug.ratio);
    case AugmentationKind::Rotation:
      return rotate_box(b, aug.angle_deg, size);
    case AugmentationKind::Original:
    case AugmentationKind::Cutout:
    case AugmentationKind::GaussianNoise:
    case AugmentationKind::SaltPepper:
      return b;
  }
  return b;
}

BoundingBox map_box(const BoundingBox& b, const AugmentationSpec& aug, const ImageSize& size) {
  auto mapped = try_map_box(b, aug, size);
  if (!mapped) {
    throw DegenerateMappingError("box degenerates under augmentation '" +
                                 std::string(aug.tag()) + "'");
  }
  return *mapped;
}

}  // namespace cald

// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "cald/errors.hpp"
#include "cald/geometry.hpp"
#include "cald/prediction.hpp"
#include "cald/rng.hpp"
#include "oracles.hpp"

using namespace cald;

namespace {

oracle::IntBox random_int_box(Rng& rng, int extent) {
  const int x0 = static_cast<int>(rng.below(extent - 1));
  const int y0 = static_cast<int>(rng.below(extent - 1));
  const int x1 = x0 + 1 + static_cast<int>(rng.below(extent - x0 - 1));
  const int y1 = y0 + 1 + static_cast<int>(rng.below(extent - y0 - 1));
  return {x0, y0, x1, y1};
}

BoundingBox to_box(const oracle::IntBox& b) { return {double(b.x0), double(b.y0), double(b.x1), double(b.y1)}; }

BoundingBox random_box(Rng& rng, const ImageSize& size) {
  for (;;) {
    const double a = rng.uniform(0, size.width), b = rng.uniform(0, size.width);
    const double c = rng.uniform(0, size.height), d = rng.uniform(0, size.height);
    if (auto box = BoundingBox::make(std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d))) {
      return *box;
    }
  }
}

}  // namespace

TEST_CASE("box construction rejects empty and non-finite boxes") {
  CHECK_THROWS_AS(BoundingBox(0, 0, 0, 10), ConfigError);
  CHECK_THROWS_AS(BoundingBox(5, 0, 1, 10), ConfigError);
  CHECK_THROWS_AS(BoundingBox(0, 0, INFINITY, 10), ConfigError);
  CHECK_FALSE(BoundingBox::make(0, 0, 10, 0).has_value());
  CHECK_THROWS_AS(ImageSize(0, 10), ConfigError);
}

TEST_CASE("iou examples") {
  const BoundingBox a(0, 0, 10, 10);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, BoundingBox(20, 20, 30, 30)) == 0.0);
  CHECK(iou(a, BoundingBox(5, 0, 15, 10)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(oracle::grid_iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou matches the cell counting oracle on integer boxes") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_int_box(rng, 40);
    const auto b = random_int_box(rng, 40);
    const double got = iou(to_box(a), to_box(b));
    CHECK(got == oracle::grid_iou(a, b));
    CHECK(got == iou(to_box(b), to_box(a)));
    CHECK(got >= 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("iou is one only for identical boxes") {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const auto a = to_box(random_int_box(rng, 20));
    const auto b = to_box(random_int_box(rng, 20));
    CHECK((iou(a, b) == 1.0) == (a == b));
  }
}

TEST_CASE("map_box examples") {
  const ImageSize frame(100, 100);
  const BoundingBox b(10, 20, 30, 40);
  CHECK(map_box(b, AugmentationSpec::horizontal_flip(), frame) == BoundingBox(70, 20, 90, 40));
  CHECK(map_box(b, AugmentationSpec::downsize(0.5), frame) == BoundingBox(5, 10, 15, 20));
  CHECK(map_box(b, AugmentationSpec::rotation(0.0), frame) == b);
  CHECK(map_box(b, AugmentationSpec::cutout(), frame) == b);
  CHECK(map_box(b, AugmentationSpec::gaussian_noise(), frame) == b);
  CHECK(map_box(b, AugmentationSpec::salt_pepper(), frame) == b);
  CHECK(mapped_size(ImageSize(500, 375), AugmentationSpec::downsize(0.8)) == ImageSize(400, 300));
  CHECK(mapped_size(ImageSize(500, 375), AugmentationSpec::rotation(5)) == ImageSize(500, 375));
}

TEST_CASE("rotation by 180 degrees is a point reflection through the centre") {
  const ImageSize frame(100, 60);
  const auto r = map_box(BoundingBox(10, 5, 30, 25), AugmentationSpec::rotation(180), frame);
  CHECK(r.x_min() == doctest::Approx(70));
  CHECK(r.x_max() == doctest::Approx(90));
  CHECK(r.y_min() == doctest::Approx(35));
  CHECK(r.y_max() == doctest::Approx(55));
}

TEST_CASE("rotation can clip a corner box away entirely") {
  // A thin sliver in the corner ends up outside the frame after a 45 degree turn.
  const ImageSize frame(100, 100);
  const BoundingBox sliver(0, 0, 1, 1);
  CHECK_FALSE(try_map_box(sliver, AugmentationSpec::rotation(45), frame).has_value());
  CHECK_THROWS_AS(map_box(sliver, AugmentationSpec::rotation(45), frame), DegenerateMappingError);
}

TEST_CASE("map_box rejects boxes outside the frame") {
  CHECK_THROWS_AS(map_box(BoundingBox(0, 0, 120, 10), AugmentationSpec::horizontal_flip(),
                          ImageSize(100, 100)),
                  ConfigError);
}

TEST_CASE("augmentation parameters are validated") {
  CHECK_THROWS_AS(AugmentationSpec::downsize(0.0).validate(), ConfigError);
  CHECK_THROWS_AS(AugmentationSpec::downsize(1.5).validate(), ConfigError);
  CHECK_THROWS_AS(AugmentationSpec::rotation(-180).validate(), ConfigError);
  CHECK_NOTHROW(AugmentationSpec::rotation(180).validate());
  CHECK(AugmentationSpec::from_tag("D") == AugmentationSpec::downsize(0.8));
  CHECK(AugmentationSpec::from_tag("R").tag() == "R");
  CHECK_THROWS_AS(AugmentationSpec::from_tag("X"), ConfigError);
}

TEST_CASE("flip is an involution") {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const ImageSize frame(1 + int(rng.below(800)), 1 + int(rng.below(800)));
    const auto b = to_box(random_int_box(rng, std::min(frame.width, frame.height) + 1));
    const auto flip = AugmentationSpec::horizontal_flip();
    if (!b.within(frame)) continue;
    CHECK(map_box(map_box(b, flip, frame), flip, frame) == b);
  }
}

TEST_CASE("downsize followed by the inverse scale recovers the box") {
  Rng rng(14);
  for (int i = 0; i < 1000; ++i) {
    const ImageSize frame(640, 480);
    const auto b = random_box(rng, frame);
    const double r = rng.uniform(0.05, 1.0);
    const auto back = scale_box(map_box(b, AugmentationSpec::downsize(r), frame), 1.0 / r);
    CHECK(std::abs(back.x_min() - b.x_min()) <= 1e-9);
    CHECK(std::abs(back.y_min() - b.y_min()) <= 1e-9);
    CHECK(std::abs(back.x_max() - b.x_max()) <= 1e-9);
    CHECK(std::abs(back.y_max() - b.y_max()) <= 1e-9);
  }
}

TEST_CASE("rotation round trip contains the original box") {
  Rng rng(15);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const ImageSize frame(640, 480);
    const auto b = random_box(rng, frame);
    const double theta = rng.uniform(-30.0, 30.0);
    if (theta == 0.0) continue;
    // Only boxes whose rotated hull stays inside the frame: clipping discards extent.
    const auto spec = AugmentationSpec::rotation(theta);
    const auto fwd = try_map_box(b, spec, frame);
    if (!fwd) continue;
    const bool clipped = fwd->x_min() == 0.0 || fwd->y_min() == 0.0 ||
                         fwd->x_max() == frame.width || fwd->y_max() == frame.height;
    if (clipped) continue;
    const auto back = map_box(*fwd, AugmentationSpec::rotation(-theta), frame);
    CHECK(back.contains(b, 1e-9));
    ++checked;
  }
  CHECK(checked > 500);
}

TEST_CASE("map_predictions keeps scores and drops degenerate boxes") {
  const ImageSize frame(100, 100);
  CHECK(map_predictions({}, AugmentationSpec::horizontal_flip(), frame).empty());
  std::vector<PredictionRecord> preds{{BoundingBox(10, 20, 30, 40), {0.9, 0.1}}};
  auto same = map_predictions(preds, AugmentationSpec::original(), frame);
  REQUIRE(same.size() == 1);
  CHECK(same[0].box == preds[0].box);
  CHECK(same[0].scores == preds[0].scores);
  auto flipped = map_predictions(preds, AugmentationSpec::horizontal_flip(), frame);
  REQUIRE(flipped.size() == 1);
  CHECK(flipped[0].box == BoundingBox(70, 20, 90, 40));
  CHECK(flipped[0].scores == preds[0].scores);
  preds.push_back({BoundingBox(0, 0, 1, 1), {0.5, 0.5}});
  CHECK(map_predictions(preds, AugmentationSpec::rotation(45), frame).size() == 1);
}

TEST_CASE("retain filters on the top confidence") {
  std::vector<PredictionRecord> preds{{BoundingBox(0, 0, 1, 1), {0.05, 0.02}},
                                      {BoundingBox(0, 0, 2, 2), {0.1, 0.0}},
                                      {BoundingBox(0, 0, 3, 3), {0.0, 0.0}}};
  auto kept = retain(preds, 0.1);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].box == BoundingBox(0, 0, 2, 2));
  CHECK(retain(preds, 0.0).size() == 2);
  CHECK_THROWS_AS(validate_scores(std::vector<double>{1.2, 0.0}, 2), ConfigError);
  CHECK_THROWS_AS(validate_scores(std::vector<double>{0.2}, 2), ConfigError);
}

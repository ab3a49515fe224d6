// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cald/errors.hpp"
#include "cald/pipeline.hpp"
#include "cald/prediction_io.hpp"

using namespace cald;

namespace {

DatasetManifest manifest() {
  std::istringstream in(R"({"class_names": ["a", "b"], "augmentations": {"D": {"ratio": 0.5}}})");
  return parse_manifest(in);
}

std::string record(const std::string& id, const std::string& aug, const std::string& dets = "[]") {
  return R"({"image_id": ")" + id + R"(", "augmentation": ")" + aug +
         R"(", "width": 100, "height": 80, "detections": )" + dets + "}\n";
}

template <class E>
std::size_t error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_predictions(in, manifest());
  } catch (const E& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_CASE("manifest parsing") {
  const auto m = manifest();
  CHECK(m.num_classes() == 2);
  CHECK(m.class_index("b") == 1u);
  CHECK_FALSE(m.class_index("z").has_value());
  CHECK(m.augmentation("D").ratio == 0.5);
  CHECK(m.augmentation("R") == AugmentationSpec::rotation(5));
  const auto set = m.augmentation_set("FCDR");
  REQUIRE(set.size() == 4);
  CHECK(set[2] == AugmentationSpec::downsize(0.5));
  CHECK_THROWS_AS(m.augmentation_set("FF"), ConfigError);
  CHECK_THROWS_AS(m.augmentation_set("Q"), ConfigError);
  std::istringstream dup(R"({"class_names": ["a", "a"]})");
  CHECK_THROWS_AS(parse_manifest(dup), DataError);
  std::istringstream bad("{");
  CHECK_THROWS_AS(parse_manifest(bad), DataError);
  std::ostringstream out;
  write_manifest(out, m);
  std::istringstream back(out.str());
  const auto m2 = parse_manifest(back);
  CHECK(m2.class_names == m.class_names);
  CHECK(m2.augmentation("D") == m.augmentation("D"));
}

TEST_CASE("prediction parsing basics") {
  std::istringstream empty("");
  CHECK(parse_predictions(empty, manifest()).size() == 0);
  std::istringstream one(record("x", "original", R"([{"box": [1, 2, 3, 4], "scores": {"b": 0.7}}])"));
  const auto set = parse_predictions(one, manifest());
  REQUIRE(set.size() == 1);
  const auto img = set.find("x");
  REQUIRE(img);
  CHECK(img->augmented.empty());
  CHECK(img->size == ImageSize(100, 80));
  REQUIRE(img->original.size() == 1);
  CHECK(img->original[0].scores == std::vector<double>{0.0, 0.7});
  CHECK_FALSE(set.find("y").has_value());
}

TEST_CASE("prediction parsing errors carry line numbers") {
  const auto good = record("x", "original");
  CHECK(error_line<ParseError>(good + record("y", "original", R"([{"box": [1, 2, 3, 4], "scores": {"a": 1.2}}])")) == 2);
  CHECK(error_line<DuplicateRecordError>(good + good) == 2);
  CHECK(error_line<ParseError>(good + "\n{not json\n") == 3);
  CHECK(error_line<ParseError>(record("x", "original", R"([{"box": [1, 2, 3, 4], "scores": {"zebra": 0.5}}])")) == 1);
  CHECK(error_line<ParseError>(record("x", "original", R"([{"box": [1, 2, 300, 4], "scores": {"a": 0.5}}])")) == 1);
  CHECK(error_line<ParseError>(record("x", "original", R"([{"box": [3, 2, 1, 4], "scores": {"a": 0.5}}])")) == 1);
  CHECK(error_line<ParseError>(good + record("x", "Q")) == 2);
}

TEST_CASE("images without an original record are reported") {
  std::istringstream in(record("x", "F") + record("y", "original") + record("z", "C"));
  try {
    parse_predictions(in, manifest());
    FAIL("expected IncompleteInputError");
  } catch (const IncompleteInputError& e) {
    CHECK(e.ids() == std::vector<std::string>{"x", "z"});
  }
}

TEST_CASE("parsing does not depend on the order of lines from distinct images") {
  const std::string l1 = record("x", "original", R"([{"box": [1, 2, 3, 4], "scores": {"a": 0.4}}])");
  const std::string l2 = record("y", "original", R"([{"box": [5, 6, 7, 8], "scores": {"b": 0.9}}])");
  const std::string l3 = record("x", "F", R"([{"box": [97, 2, 99, 4], "scores": {"a": 0.3}}])");
  std::istringstream a(l1 + l2 + l3), b(l2 + l3 + l1);
  const auto sa = parse_predictions(a, manifest());
  const auto sb = parse_predictions(b, manifest());
  for (const std::string id : {"x", "y"}) {
    const auto pa = sa.find(id), pb = sb.find(id);
    REQUIRE(pa);
    REQUIRE(pb);
    std::ostringstream oa, ob;
    write_predictions(oa, *pa, manifest());
    write_predictions(ob, *pb, manifest());
    CHECK(oa.str() == ob.str());
  }
}

TEST_CASE("predictions survive a write and parse cycle") {
  std::istringstream in(record("x", "original", R"([{"box": [1.5, 2, 3, 4], "scores": {"a": 0.25, "b": 0.5}}])") +
                        record("x", "D", R"([{"box": [1, 1, 2, 2], "scores": {"b": 1}}])"));
  const auto set = parse_predictions(in, manifest());
  std::ostringstream out;
  write_predictions(out, set.images()[0], manifest());
  std::istringstream back(out.str());
  const auto again = parse_predictions(back, manifest());
  std::ostringstream out2;
  write_predictions(out2, again.images()[0], manifest());
  CHECK(out.str() == out2.str());
  CHECK(again.images()[0].original[0].box == BoundingBox(1.5, 2, 3, 4));
}

TEST_CASE("label parsing") {
  std::istringstream empty("");
  CHECK(parse_labels(empty, manifest()).empty());
  std::istringstream one(R"({"image_id": "x", "objects": [{"class": "a"}, {"class": "a"}, {"class": "b"}]})");
  const auto labels = parse_labels(one, manifest());
  CHECK(labels.at("x") == LabelCounts{2, 1});
  std::istringstream unknown(R"({"image_id": "x", "objects": [{"class": "c"}]})");
  CHECK_THROWS_AS(parse_labels(unknown, manifest()), ParseError);
  std::istringstream dup("{\"image_id\": \"x\", \"objects\": []}\n{\"image_id\": \"x\", \"objects\": []}\n");
  CHECK_THROWS_AS(parse_labels(dup, manifest()), DuplicateRecordError);
  std::ostringstream out;
  const std::vector<std::size_t> classes{1, 0, 1};
  write_labels(out, "y", classes, manifest());
  std::istringstream back(out.str());
  CHECK(parse_labels(back, manifest()).at("y") == LabelCounts{1, 2});
}

TEST_CASE("selection reports") {
  std::ostringstream empty;
  write_selection(empty, {});
  const std::string header = empty.str();
  CHECK(std::count(header.begin(), header.end(), '\n') == 1);
  std::istringstream empty_in(empty.str());
  CHECK(parse_selection(empty_in).empty());

  std::vector<CycleRecord> cycles{
      {1, {{"b", 0.125, 0.5}, {"a", 0.25, 0.1}, {"c", 0.375, 0.0}}, {{"b", 0.125, 0.5}, {"a", 0.25, 0.1}}},
      {2, {{"d", 0.1 / 3, 1.0 / 7}}, {{"d", 0.1 / 3, 1.0 / 7}}}};
  std::ostringstream out;
  write_selection(out, cycles);
  std::istringstream in(out.str());
  CHECK(parse_selection(in) == cycles);
  std::ostringstream again;
  write_selection(again, cycles);
  CHECK(again.str() == out.str());

  std::istringstream no_header(R"({"cycle": 1, "rank": 1, "image_id": "a", "metric_M": 0, "js_mutual": 0, "stage": "final"})");
  CHECK_THROWS_AS(parse_selection(no_header), ParseError);
  std::string text = out.str();
  const auto pos = text.find("\"rank\":2");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 8, "\"rank\":5");
  std::istringstream gap(text);
  CHECK_THROWS_AS(parse_selection(gap), ParseError);
}

TEST_CASE("fixture files score to one line per image") {
  std::ifstream mf(CALD_FIXTURE_DIR "/manifest.json");
  const auto m = parse_manifest(mf);
  std::ifstream pf(CALD_FIXTURE_DIR "/predictions.jsonl");
  const auto preds = parse_predictions(pf, m);
  REQUIRE(preds.size() == 3);
  SelectionConfig config;
  config.augmentations = m.augmentation_set("FCDR");
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto scored = score_images(ids, preds, m.num_classes(), config);
  std::vector<ImageInformation> infos;
  for (const auto& s : scored) infos.push_back(s.info);
  std::ostringstream out;
  write_scores(out, infos);
  const std::string report = out.str();
  CHECK(std::count(report.begin(), report.end(), '\n') == 3);
  CHECK(scored[2].info.no_references);
  CHECK(scored[2].info.metric == 1.3);
  CHECK(scored[1].info.metric < scored[0].info.metric);
}

// SPDX-License-Identifier: Apache-2.0
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

#include "cald/class_distribution.hpp"
#include "cald/consistency.hpp"
#include "cald/errors.hpp"
#include "cald/geometry.hpp"
#include "cald/pipeline.hpp"
#include "cald/prediction_io.hpp"
#include "cald/simulator.hpp"

namespace py = pybind11;
using namespace cald;

namespace {

DefaultMPolicy policy_from(const std::string& s) {
  if (s == "beta") return DefaultMPolicy::Beta;
  if (s == "zero") return DefaultMPolicy::Zero;
  throw ConfigError("default_m must be 'beta' or 'zero'");
}

py::dict info_to_dict(const ImageInformation& info) {
  py::dict per;
  for (const auto& [aug, v] : info.per_augmentation) per[py::str(std::string(aug.tag()))] = v;
  py::dict d;
  d["image_id"] = info.image_id;
  d["metric"] = info.metric;
  d["no_references"] = info.no_references;
  d["per_augmentation"] = per;
  return d;
}

std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Active-learning sample selection for object detectors";

  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  py::class_<ImageSize>(m, "ImageSize")
      .def(py::init<int, int>(), py::arg("width"), py::arg("height"))
      .def_readonly("width", &ImageSize::width)
      .def_readonly("height", &ImageSize::height);

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<double, double, double, double>(), py::arg("x_min"), py::arg("y_min"),
           py::arg("x_max"), py::arg("y_max"))
      .def_property_readonly("x_min", &BoundingBox::x_min)
      .def_property_readonly("y_min", &BoundingBox::y_min)
      .def_property_readonly("x_max", &BoundingBox::x_max)
      .def_property_readonly("y_max", &BoundingBox::y_max)
      .def("as_tuple", [](const BoundingBox& b) {
        return py::make_tuple(b.x_min(), b.y_min(), b.x_max(), b.y_max());
      })
      .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
      .def("__repr__", [](const BoundingBox& b) {
        return "BoundingBox(" + std::to_string(b.x_min()) + ", " + std::to_string(b.y_min()) + ", " +
               std::to_string(b.x_max()) + ", " + std::to_string(b.y_max()) + ")";
      });

  py::class_<AugmentationSpec>(m, "AugmentationSpec")
      .def_static("from_tag", &AugmentationSpec::from_tag, py::arg("tag"))
      .def_static("horizontal_flip", &AugmentationSpec::horizontal_flip)
      .def_static("downsize", &AugmentationSpec::downsize, py::arg("ratio") = 0.8)
      .def_static("rotation", &AugmentationSpec::rotation, py::arg("angle_deg") = 5.0)
      .def_static("cutout", &AugmentationSpec::cutout, py::arg("area_fraction") = 0.2)
      .def_property_readonly("tag", [](const AugmentationSpec& a) { return std::string(a.tag()); });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def("map_box", &map_box, py::arg("box"), py::arg("aug"), py::arg("size"));

  py::class_<PredictionRecord>(m, "PredictionRecord")
      .def(py::init<BoundingBox, std::vector<double>>(), py::arg("box"), py::arg("scores"))
      .def_readwrite("box", &PredictionRecord::box)
      .def_readwrite("scores", &PredictionRecord::scores);

  py::class_<ConsistencyRecord>(m, "ConsistencyRecord")
      .def_readonly("c_box", &ConsistencyRecord::c_box)
      .def_readonly("c_score", &ConsistencyRecord::c_score)
      .def_readonly("m", &ConsistencyRecord::m);

  m.def("normalize", [](const std::vector<double>& s) { return normalize(s); });
  m.def("js_divergence",
        [](const std::vector<double>& p, const std::vector<double>& q) { return js_divergence(p, q); });
  m.def("pair_consistency", &pair_consistency, py::arg("reference"), py::arg("corresponding"));
  m.def(
      "match_prediction",
      [](const BoundingBox& ref, const std::vector<PredictionRecord>& cands) -> py::object {
        auto match = match_prediction(ref, cands);
        if (!match) return py::none();
        return py::make_tuple(match->index, match->iou);
      },
      py::arg("ref_box"), py::arg("candidates"));

  py::class_<AugmentedView>(m, "AugmentedView")
      .def(py::init<AugmentationSpec, std::vector<PredictionRecord>, std::vector<PredictionRecord>>(),
           py::arg("aug"), py::arg("references"), py::arg("predictions"));

  m.def(
      "image_information",
      [](const std::string& id, const std::vector<AugmentedView>& views, double beta,
         const std::string& variant, const std::string& default_m) {
        const auto policy = policy_from(default_m);
        if (variant == "min") return info_to_dict(image_information(id, views, beta, policy));
        if (variant == "mean") return info_to_dict(image_information_mean(id, views, beta, policy));
        throw ConfigError("variant must be 'min' or 'mean'");
      },
      py::arg("image_id"), py::arg("views"), py::arg("beta") = 1.3, py::arg("variant") = "min",
      py::arg("default_m") = "beta");

  m.def("softmax", [](const std::vector<double>& x) { return softmax(x); });
  m.def(
      "labeled_pool_distribution",
      [](const std::vector<std::int64_t>& counts, bool normalized) {
        return labeled_pool_distribution(counts, normalized ? CountMode::NormalizedCounts
                                                            : CountMode::RawCounts)
            .probs();
      },
      py::arg("counts"), py::arg("normalized") = false);
  m.def(
      "unlabeled_image_distribution",
      [](const std::vector<PredictionRecord>& original,
         const std::vector<std::vector<PredictionRecord>>& augmented, std::size_t num_classes) {
        std::vector<AugmentedPredictions> augs;
        for (const auto& a : augmented) augs.push_back({AugmentationSpec::horizontal_flip(), a});
        return unlabeled_image_distribution(original, augs, num_classes).probs();
      },
      py::arg("original"), py::arg("augmented"), py::arg("num_classes"));
  m.def("mutual_information", [](const std::vector<double>& img, const std::vector<double>& pool) {
    return mutual_information(ClassDistribution(img), ClassDistribution(pool));
  });
  m.def(
      "select_by_mutual_information",
      [](const std::vector<std::pair<std::string, std::vector<double>>>& pool_candidates,
         const std::vector<double>& pool, std::size_t budget) {
        std::vector<Candidate> cands;
        for (const auto& [id, probs] : pool_candidates) cands.push_back({id, ClassDistribution(probs)});
        return select_by_mutual_information(cands, ClassDistribution(pool), budget);
      },
      py::arg("candidates"), py::arg("pool_distribution"), py::arg("budget"));
  m.def(
      "stage_one",
      [](const std::vector<std::pair<std::string, double>>& scores, std::size_t budget,
         double expansion) {
        std::vector<ImageInformation> infos;
        for (const auto& [id, metric] : scores) infos.push_back({id, metric, {}, false});
        SelectionConfig config;
        config.budget_per_cycle = budget;
        config.expansion_ratio = expansion;
        return stage_one(infos, config);
      },
      py::arg("scores"), py::arg("budget"), py::arg("expansion") = 0.2);
  m.def("beta_search", &beta_search, py::arg("evaluate"), py::arg("step") = 0.1,
        py::arg("max_steps") = 5);

  m.def(
      "score_files",
      [](const std::string& manifest_path, const std::string& predictions_path, double beta,
         const std::string& variant, const std::string& augmentations) {
        auto min = open(manifest_path);
        const auto manifest = parse_manifest(min);
        auto pin = open(predictions_path);
        const auto preds = parse_predictions(pin, manifest);
        SelectionConfig config;
        config.beta = beta;
        config.metric_variant = variant == "mean" ? MetricVariant::Mean : MetricVariant::Min;
        config.augmentations = manifest.augmentation_set(augmentations);
        std::vector<std::string> ids;
        for (const auto& img : preds.images()) ids.push_back(img.image_id);
        py::list out;
        for (const auto& s : score_images(ids, preds, manifest.num_classes(), config)) {
          out.append(info_to_dict(s.info));
        }
        return out;
      },
      py::arg("manifest"), py::arg("predictions"), py::arg("beta") = 1.3,
      py::arg("variant") = "min", py::arg("augmentations") = "FCDR");

  m.def(
      "simulate",
      [](const std::string& strategy, const std::vector<std::uint64_t>& seeds, std::size_t images,
         std::size_t cycles, std::size_t budget, double expansion) {
        sim::ExperimentConfig config;
        config.num_images = images;
        config.selection.cycles = cycles;
        config.selection.budget_per_cycle = budget;
        config.selection.expansion_ratio = expansion;
        config.initial_labeled = std::min(config.initial_labeled, images / 2);
        py::list out;
        for (const auto& r : sim::run_experiment(sim::Strategy::parse(strategy), config, seeds)) {
          py::dict d;
          d["strategy"] = r.strategy;
          d["seed"] = r.seed;
          d["cycle"] = r.cycle;
          d["mean_error"] = r.mean_error;
          d["balance_js"] = r.balance_js;
          d["mean_M_selected"] = r.mean_m_selected;
          d["mean_M_labeled"] = r.mean_m_labeled;
          out.append(d);
        }
        return out;
      },
      py::arg("strategy") = "cald", py::arg("seeds") = std::vector<std::uint64_t>{0},
      py::arg("images") = 2000, py::arg("cycles") = 3, py::arg("budget") = 100,
      py::arg("expansion") = 0.2);
}

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "nrfi/datagen.hpp"
#include "nrfi/error.hpp"
#include "nrfi/feature_stats.hpp"
#include "nrfi/imitation.hpp"
#include "nrfi/mapping.hpp"
#include "nrfi/mlp.hpp"

namespace py = pybind11;
using namespace nrfi;

namespace {

Dataset labeled(const RowMatrix& x, const std::vector<int>& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DimensionError("X and y have different row counts");
  Dataset ds;
  ds.features = x;
  ds.labels = y;
  for (int label : y) {
    if (label < 0) throw DataError("labels must be non-negative class indices");
    ds.class_count = std::max(ds.class_count, label + 1);
  }
  return ds;
}

template <class F>
RowMatrix map_rows(const RowMatrix& x, int outputs, F&& f) {
  RowMatrix out(x.rows(), outputs);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto p = f(std::span<const double>(x.row(r).data(), static_cast<std::size_t>(x.cols())));
    for (int c = 0; c < outputs; ++c) out(r, c) = p[static_cast<std::size_t>(c)];
  }
  return out;
}

void check_width(const RowMatrix& x, int expected) {
  if (x.cols() != expected)
    throw DimensionError("expected " + std::to_string(expected) + " features, got " + std::to_string(x.cols()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Random forest to neural network imitation";

  auto base = py::register_exception<Error>(m, "NrfiError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());

  m.def(
      "make_synthetic",
      [](const std::string& kind, std::size_t samples, int features, double noise, std::uint64_t seed, int classes) {
        auto ds = make_synthetic(parse_synthetic_kind(kind), samples, features, noise, seed, classes);
        return py::make_tuple(ds.features, ds.labels);
      },
      py::arg("kind"), py::arg("samples"), py::arg("features") = 2, py::arg("noise") = 0.2, py::arg("seed") = 0,
      py::arg("classes") = 2);

  py::class_<FeatureStats>(m, "FeatureStats")
      .def(py::init([](const RowMatrix& x) { return compute_feature_stats(x); }), py::arg("X"))
      .def_readonly("min", &FeatureStats::min)
      .def_readonly("max", &FeatureStats::max)
      .def_readonly("mean", &FeatureStats::mean)
      .def_readonly("stddev", &FeatureStats::stddev)
      .def("to_json", [](const FeatureStats& s) { return to_json(s).dump(); })
      .def_static("from_json", [](const std::string& text) { return feature_stats_from_json(nlohmann::json::parse(text)); });

  py::class_<RandomForest>(m, "Forest")
      .def_static(
          "train",
          [](const RowMatrix& x, const std::vector<int>& y, int trees, std::optional<int> max_depth, std::uint64_t seed) {
            TreeTrainParams p;
            p.max_depth = max_depth;
            return train_forest(labeled(x, y), trees, p, seed);
          },
          py::arg("X"), py::arg("y"), py::arg("trees") = 25, py::arg("max_depth") = py::none(), py::arg("seed") = 0)
      .def_property_readonly("tree_count", &RandomForest::tree_count)
      .def_property_readonly("feature_count", &RandomForest::feature_count)
      .def_property_readonly("class_count", &RandomForest::class_count)
      .def("predict_proba",
           [](const RandomForest& rf, const RowMatrix& x) {
             check_width(x, rf.feature_count());
             return map_rows(x, rf.class_count(), [&](std::span<const double> r) { return predict_forest(rf, r); });
           })
      .def("accuracy", [](const RandomForest& rf, const RowMatrix& x, const std::vector<int>& y) {
        return evaluate_accuracy(rf, labeled(x, y));
      })
      .def("direct_mapping_size", [](const RandomForest& rf) { return direct_mapping_size(rf); })
      .def("to_json", [](const RandomForest& rf) { return to_json(rf).dump(); })
      .def_static("from_json", [](const std::string& text) { return forest_from_json(nlohmann::json::parse(text)); });

  py::class_<Mlp>(m, "Mlp")
      .def_readonly("layer_sizes", &Mlp::layer_sizes)
      .def_property_readonly("parameter_count", [](const Mlp& n) { return count_parameters(n); })
      .def("forward",
           [](const Mlp& net, const RowMatrix& x) {
             check_width(x, net.input_size());
             return forward_batch(net, x);
           })
      .def("to_json", [](const Mlp& n) { return to_json(n).dump(); })
      .def_static("from_json", [](const std::string& text) { return mlp_from_json(nlohmann::json::parse(text)); });

  py::class_<MappedNetwork>(m, "MappedNetwork")
      .def_property_readonly("parameter_count", [](const MappedNetwork& n) { return count_parameters(n); })
      .def("forward", [](const MappedNetwork& net, const RowMatrix& x) {
        const auto width = net.forward(std::vector<double>(static_cast<std::size_t>(x.cols()), 0.0)).size();
        return map_rows(x, static_cast<int>(width), [&](std::span<const double> r) { return net.forward(r); });
      });

  m.def(
      "map_direct",
      [](const RandomForest& rf, const std::string& mode, double beta) { return map_direct(rf, parse_activation(mode), beta); },
      py::arg("forest"), py::arg("mode") = "hard", py::arg("beta") = 1e4);

  m.def(
      "imitate",
      [](const RandomForest& rf, const FeatureStats& stats, const std::vector<int>& hidden, const std::string& generation,
         const std::string& training, std::size_t pool_size, std::size_t probe_size, bool hard_labels,
         std::optional<RowMatrix> x_test, std::optional<std::vector<int>> y_test) {
        const auto gen = generation_config_from_json(nlohmann::json::parse(generation));
        const auto train = train_config_from_json(nlohmann::json::parse(training));
        gen.validate();
        train.validate();
        ImitationOptions opts{pool_size, probe_size, hard_labels};
        std::optional<Dataset> test;
        if (x_test.has_value() != y_test.has_value()) throw Error("pass both X_test and y_test or neither");
        if (x_test) test = labeled(*x_test, *y_test);
        ImitationResult r;
        {
          py::gil_scoped_release release;
          r = imitate(rf, stats, hidden, gen, train, opts, test ? &*test : nullptr);
        }
        return py::make_tuple(std::move(r.student), to_json(r.report).dump());
      },
      py::arg("forest"), py::arg("stats"), py::arg("hidden"), py::arg("generation"), py::arg("training"),
      py::arg("pool_size") = 2000, py::arg("probe_size") = 2000, py::arg("hard_labels") = false,
      py::arg("X_test") = py::none(), py::arg("y_test") = py::none());

  m.def("default_generation", [] { return to_json(GenerationConfig{}).dump(); });
  m.def("default_training", [] { return to_json(TrainConfig{}).dump(); });
}

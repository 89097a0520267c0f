// SPDX-License-Identifier: MIT
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sntf/io.hpp"
#include "sntf/model.hpp"
#include "sntf/solver.hpp"
#include "sntf/synth.hpp"
#include "sntf/tv.hpp"

namespace py = pybind11;
using namespace sntf;

namespace {

DenseTensor tensor_from_array(const py::array_t<double, py::array::c_style |
                                                            py::array::forcecast>& arr) {
  std::vector<std::size_t> shape(arr.ndim());
  for (py::ssize_t a = 0; a < arr.ndim(); ++a) {
    shape[static_cast<std::size_t>(a)] =
        static_cast<std::size_t>(arr.shape(a));
  }
  const double* data = arr.data();
  return DenseTensor(std::move(shape),
                     std::vector<double>(data, data + arr.size()));
}

py::array_t<double> tensor_to_array(const DenseTensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> arr(shape);
  std::copy(t.values().begin(), t.values().end(), arr.mutable_data());
  return arr;
}

py::array_t<double> vector_to_array(const FactorVec& v) {
  py::array_t<double> arr(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), arr.mutable_data());
  return arr;
}

StratifiedDataset dataset_from_arrays(const py::list& arrays) {
  std::vector<DenseTensor> strata;
  for (const auto& item : arrays) {
    strata.push_back(tensor_from_array(
        py::cast<py::array_t<double, py::array::c_style | py::array::forcecast>>(
            item)));
  }
  return StratifiedDataset(std::move(strata));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stratified non-negative tensor factorization core";

  py::class_<DenseTensor>(m, "DenseTensor")
      .def(py::init(&tensor_from_array), py::arg("array"))
      .def_property_readonly("shape",
                             [](const DenseTensor& t) { return t.shape(); })
      .def("to_numpy", &tensor_to_array)
      .def("__eq__", [](const DenseTensor& a, const DenseTensor& b) {
        return a == b;
      });

  py::class_<StratifiedDataset>(m, "StratifiedDataset")
      .def(py::init(&dataset_from_arrays), py::arg("strata"))
      .def_property_readonly("stratum_count",
                             &StratifiedDataset::stratum_count)
      .def("stratum",
           [](const StratifiedDataset& d, std::size_t i) {
             return tensor_to_array(d.stratum(i));
           })
      .def_property_readonly("trailing_dims",
                             [](const StratifiedDataset& d) {
                               return std::vector<std::size_t>(
                                   d.trailing_dims().begin(),
                                   d.trailing_dims().end());
                             })
      .def_property_readonly("total_sq_norm",
                             &StratifiedDataset::total_sq_norm);

  py::class_<ModelState>(m, "ModelState")
      .def_property_readonly("topic_rank", &ModelState::topic_rank)
      .def_property_readonly("stratum_count", &ModelState::stratum_count)
      .def("strata_rank", &ModelState::strata_rank)
      .def("topic_factor",
           [](const ModelState& mdl, std::size_t j, std::size_t axis) {
             return vector_to_array(mdl.topics.at(j).at(axis - 1));
           },
           py::arg("rank"), py::arg("axis"))
      .def("coding",
           [](const ModelState& mdl, std::size_t i, std::size_t j) {
             return vector_to_array(mdl.codings.at(i).at(j));
           })
      .def("strata_factor",
           [](const ModelState& mdl, std::size_t i, std::size_t j,
              std::size_t axis) {
             return vector_to_array(
                 mdl.strata_factors.at(i).at(j).at(axis - 1));
           },
           py::arg("stratum"), py::arg("rank"), py::arg("axis"));

  py::enum_<Norm>(m, "Norm")
      .value("L2", Norm::L2)
      .value("L1", Norm::L1);

  py::class_<EarlyStop>(m, "EarlyStop")
      .def(py::init<>())
      .def_readwrite("enabled", &EarlyStop::enabled)
      .def_readwrite("rel_tol", &EarlyStop::rel_tol)
      .def_readwrite("patience", &EarlyStop::patience);

  py::class_<FitConfig>(m, "FitConfig")
      .def(py::init<>())
      .def_readwrite("topic_rank", &FitConfig::topic_rank)
      .def_readwrite("strata_ranks", &FitConfig::strata_ranks)
      .def_readwrite("outer_iterations", &FitConfig::outer_iterations)
      .def_readwrite("strata_sweeps", &FitConfig::strata_sweeps)
      .def_readwrite("reg_strength", &FitConfig::reg_strength)
      .def_readwrite("regularized_axes", &FitConfig::regularized_axes)
      .def_readwrite("normalization", &FitConfig::normalization)
      .def_readwrite("early_stop", &FitConfig::early_stop)
      .def_readwrite("seed", &FitConfig::seed)
      .def_readwrite("clip_floor", &FitConfig::clip_floor);

  py::class_<LossPoint>(m, "LossPoint")
      .def_readonly("iteration", &LossPoint::iteration)
      .def_readonly("objective", &LossPoint::objective)
      .def_readonly("seconds", &LossPoint::seconds);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("model", &FitResult::model)
      .def_readonly("trace", &FitResult::trace)
      .def_property_readonly("termination", [](const FitResult& r) {
        return std::string(to_string(r.termination));
      });

  m.def("init_model", &init_model, py::arg("dataset"), py::arg("config"));
  m.def(
      "fit",
      [](const StratifiedDataset& dataset, const FitConfig& config,
         std::size_t threads) { return fit(dataset, config, {}, threads); },
      py::arg("dataset"), py::arg("config"), py::arg("threads") = 1,
      py::call_guard<py::gil_scoped_release>());
  m.def("objective", &objective, py::arg("model"), py::arg("dataset"),
        py::arg("threads") = 1);
  m.def("relative_loss", &relative_loss);
  m.def("reconstruct", [](const ModelState& mdl, std::size_t i) {
    return tensor_to_array(reconstruct(mdl, i));
  });
  m.def("param_count",
        [](const std::vector<std::size_t>& sample_counts,
           const std::vector<std::size_t>& trailing_dims,
           std::size_t topic_rank, const std::vector<std::size_t>& strata_ranks) {
          return param_count(sample_counts, trailing_dims, topic_rank,
                             strata_ranks);
        },
        py::arg("sample_counts"), py::arg("trailing_dims"),
        py::arg("topic_rank"), py::arg("strata_ranks"));

  m.def("tv_seminorm", [](const std::vector<double>& h) {
    return tv_seminorm(h);
  });
  m.def("tv_subgradient", [](const std::vector<double>& h) {
    return tv_subgradient(h);
  });

  py::class_<PlantedSpec>(m, "PlantedSpec")
      .def(py::init<>())
      .def_readwrite("sample_counts", &PlantedSpec::sample_counts)
      .def_readwrite("trailing_dims", &PlantedSpec::trailing_dims)
      .def_readwrite("topic_rank", &PlantedSpec::topic_rank)
      .def_readwrite("strata_ranks", &PlantedSpec::strata_ranks)
      .def_readwrite("density", &PlantedSpec::density)
      .def_readwrite("noise_amplitude", &PlantedSpec::noise_amplitude)
      .def_readwrite("seed", &PlantedSpec::seed);

  m.def("generate_planted", [](const PlantedSpec& spec) {
    PlantedInstance inst = generate_planted(spec);
    return py::make_tuple(std::move(inst.dataset), std::move(inst.ground_truth));
  });
  m.def("salt_and_pepper",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
               arr,
           double p, std::uint64_t seed) {
          return tensor_to_array(salt_and_pepper(tensor_from_array(arr), p,
                                                 seed));
        },
        py::arg("array"), py::arg("p"), py::arg("seed"));

  m.def("write_tensor",
        [](const std::filesystem::path& path,
           const py::array_t<double, py::array::c_style | py::array::forcecast>&
               arr) { write_tensor(path, tensor_from_array(arr)); });
  m.def("read_tensor", [](const std::filesystem::path& path) {
    return tensor_to_array(read_tensor(path));
  });
  m.def("load_dataset", &load_dataset);
  m.def("save_model", &save_model);
  m.def("load_model", &load_model);
}

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "twinforge/core_model.hpp"
#include "twinforge/error.hpp"
#include "twinforge/evaluation.hpp"
#include "twinforge/kpis.hpp"
#include "twinforge/rom.hpp"
#include "twinforge/signals.hpp"

namespace py = pybind11;
using namespace twinforge;

PYBIND11_MODULE(_twinforge, m) {
  m.doc() = "Oven digital-twin toolkit: FOM solver, excitation signals, neural-ODE ROMs.";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());
  py::register_exception<ModelCorruptError>(m, "ModelCorruptError", base.ptr());
  py::register_exception<RolloutDivergedError>(m, "RolloutDivergedError", base.ptr());

  // signals
  py::enum_<signals::SignalKind>(m, "SignalKind")
      .value("APRBS", signals::SignalKind::Aprbs)
      .value("SIN_APRBS", signals::SignalKind::SinAprbs)
      .value("MULTISINE", signals::SignalKind::Multisine)
      .value("SCHROEDER", signals::SignalKind::SchroederMultisine)
      .value("STEP", signals::SignalKind::Step)
      .value("SINE", signals::SignalKind::Sine)
      .value("CONCAT", signals::SignalKind::Concat);
  py::enum_<signals::TransitionSpeed>(m, "TransitionSpeed")
      .value("FAST", signals::TransitionSpeed::Fast)
      .value("SLOW", signals::TransitionSpeed::Slow)
      .value("FULL", signals::TransitionSpeed::Full);

  py::class_<signals::Signal>(m, "Signal")
      .def_readonly("id", &signals::Signal::id)
      .def_readonly("kind", &signals::Signal::kind)
      .def_readonly("times", &signals::Signal::times)
      .def_readonly("values", &signals::Signal::values)
      .def_property_readonly("meta_json", [](const signals::Signal& s) { return s.meta.dump(); })
      .def("__len__", &signals::Signal::size);

  m.def(
      "synth_aprbs",
      [](std::uint64_t seed, double horizon, double T_min, double T_max, double t_hold, double T_margin) {
        return signals::synth_aprbs({seed, horizon, T_min, T_max, t_hold, T_margin});
      },
      py::arg("seed"), py::arg("horizon") = signals::kDefaultHorizon, py::arg("T_min") = 293.15,
      py::arg("T_max") = signals::kOvenMax, py::arg("t_hold") = 300.0, py::arg("T_margin") = 10.0);
  m.def("aprbs_to_sinaprbs", &signals::aprbs_to_sinaprbs, py::arg("aprbs"), py::arg("speed"), py::arg("id") = "");
  m.def(
      "synth_multisine",
      [](std::uint64_t seed, int harmonics, bool schroeder) {
        signals::MultisineParams p;
        p.seed = seed;
        p.m = harmonics;
        p.schroeder = schroeder;
        return signals::synth_multisine(p);
      },
      py::arg("seed"), py::arg("m") = 4, py::arg("schroeder") = false);
  m.def("synth_step", &signals::synth_step, py::arg("level"), py::arg("t_step"),
        py::arg("horizon") = signals::kDefaultHorizon, py::arg("id") = "");
  m.def("schroeder_phases", &signals::schroeder_phases);

  // full-order model
  py::class_<core::MaterialConstants>(m, "MaterialConstants")
      .def(py::init<>())
      .def_readwrite("C0", &core::MaterialConstants::C0)
      .def_readwrite("T0", &core::MaterialConstants::T0)
      .def_readwrite("D_cb", &core::MaterialConstants::D_cb)
      .def_readwrite("h_amb_side", &core::MaterialConstants::h_amb_side)
      .def_readwrite("h_amb_bottom", &core::MaterialConstants::h_amb_bottom)
      .def_readwrite("Phi_amb", &core::MaterialConstants::Phi_amb);
  py::class_<core::CuboidGrid>(m, "CuboidGrid")
      .def(py::init<>())
      .def_readwrite("nx", &core::CuboidGrid::nx)
      .def_readwrite("ny", &core::CuboidGrid::ny)
      .def_readwrite("nz", &core::CuboidGrid::nz)
      .def("validate", &core::CuboidGrid::validate);
  py::class_<core::SimResult>(m, "SimResult")
      .def_readonly("times", &core::SimResult::times)
      .def_readonly("T_oven", &core::SimResult::T_oven)
      .def_readonly("T_A", &core::SimResult::T_A)
      .def_readonly("T_B", &core::SimResult::T_B);
  m.def(
      "simulate",
      [](const signals::Signal& s, const core::CuboidGrid& g, const core::MaterialConstants& mc) {
        py::gil_scoped_release release;
        return core::simulate(s, g, mc);
      },
      py::arg("signal"), py::arg("grid") = core::CuboidGrid{}, py::arg("constants") = core::MaterialConstants{});

  // KPIs and statistics
  m.def("crest_factor", [](const std::vector<double>& u) { return kpis::crest_factor(u); });
  m.def(
      "coverage_1d",
      [](const std::vector<double>& v, std::pair<double, double> w) { return kpis::coverage_1d(v, w); },
      py::arg("values"), py::arg("window") = kpis::kOvenAxis);
  py::class_<eval::MeasureSet>(m, "MeasureSet")
      .def_readonly("rmse", &eval::MeasureSet::rmse)
      .def_readonly("mape", &eval::MeasureSet::mape)
      .def_readonly("max", &eval::MeasureSet::max)
      .def_readonly("median", &eval::MeasureSet::median)
      .def_readonly("iqr", &eval::MeasureSet::iqr)
      .def_readonly("r2", &eval::MeasureSet::r2);
  m.def(
      "error_measures",
      [](const std::vector<double>& pred, const std::vector<double>& ref) { return eval::error_measures(pred, ref); },
      py::arg("pred"), py::arg("ref"));
  py::class_<eval::Chi2Result>(m, "Chi2Result")
      .def_readonly("statistic", &eval::Chi2Result::statistic)
      .def_readonly("p_value", &eval::Chi2Result::p_value)
      .def_readonly("df", &eval::Chi2Result::df)
      .def_readonly("passed", &eval::Chi2Result::pass)
      .def_readonly("counts", &eval::Chi2Result::counts);
  m.def(
      "chi2_uniformity",
      [](const std::vector<double>& v, int n_bins, double alpha, std::optional<std::pair<double, double>> range) {
        return eval::chi2_uniformity(v, n_bins, alpha, range);
      },
      py::arg("values"), py::arg("n_bins") = 6, py::arg("alpha") = 0.05, py::arg("range") = py::none());
  m.def(
      "pearson", [](const std::vector<double>& x, const std::vector<double>& y) { return eval::pearson(x, y); },
      py::arg("x"), py::arg("y"));

  // ROM
  py::class_<rom::Prediction>(m, "Prediction")
      .def_readonly("T_A", &rom::Prediction::T_A)
      .def_readonly("T_B", &rom::Prediction::T_B);
  py::class_<rom::RomModel>(m, "RomModel")
      .def(py::init<int, int>(), py::arg("n_free") = 2, py::arg("hidden") = 16)
      .def_property_readonly("n_free", &rom::RomModel::n_free)
      .def_property_readonly("hidden", &rom::RomModel::hidden)
      .def_property_readonly("parameter_count", &rom::RomModel::parameter_count)
      .def("initialize", &rom::RomModel::initialize, py::arg("seed"))
      .def("parameters",
           [](const rom::RomModel& r) {
             const auto p = r.parameters();
             return std::vector<double>(p.begin(), p.end());
           })
      .def("set_parameters", [](rom::RomModel& r, const std::vector<double>& theta) {
        auto p = r.parameters();
        if (theta.size() != p.size()) throw DomainError("parameter vector has the wrong length");
        std::copy(theta.begin(), theta.end(), p.begin());
      });
  m.def(
      "rollout",
      [](const rom::RomModel& model, const std::vector<double>& u, double T_A0, double T_B0) {
        return rom::rollout(model, u, {T_A0, T_B0});
      },
      py::arg("model"), py::arg("u"), py::arg("T_A0"), py::arg("T_B0"));
  m.def("load_model", &rom::load_model, py::arg("path"));
  m.def("save_model", &rom::save_model, py::arg("model"), py::arg("path"));
}

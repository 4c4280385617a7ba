#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hpso/bench.hpp"
#include "hpso/opamp.hpp"
#include "hpso/pso.hpp"
#include "hpso/spice.hpp"

namespace py = pybind11;
using namespace hpso;

namespace {

// Adapts a Python object with fitness(x), survive(x) and lower/upper bounds.
// survive may return a bool or a (bool, str) pair. Calls take the GIL, so
// the engine may run with it released and any thread count.
class PyProblem final : public Problem {
 public:
  PyProblem(py::object obj, std::vector<double> lower, std::vector<double> upper)
      : obj_(std::move(obj)), bounds_{std::move(lower), std::move(upper)} {
    bounds_.validate();
  }
  ~PyProblem() override {
    py::gil_scoped_acquire gil;
    obj_ = py::object();
  }
  double fitness(std::span<const double> x) const override {
    py::gil_scoped_acquire gil;
    return obj_.attr("fitness")(to_list(x)).cast<double>();
  }
  Survival survive(std::span<const double> x) const override {
    if (!bounds_.contains(x)) return {false, "out of bounds"};
    py::gil_scoped_acquire gil;
    const py::object r = obj_.attr("survive")(to_list(x));
    if (py::isinstance<py::tuple>(r)) {
      const auto t = r.cast<py::tuple>();
      return {t[0].cast<bool>(), t.size() > 1 ? py::str(t[1]).cast<std::string>() : std::string()};
    }
    return {r.cast<bool>(), "rejected"};
  }
  Bounds bounds() const override { return bounds_; }

 private:
  static py::list to_list(std::span<const double> x) {
    py::list l(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) l[i] = x[i];
    return l;
  }
  py::object obj_;
  Bounds bounds_;
};

RunResult run(const Problem& problem, const PsoConfig& config, bool standard) {
  py::gil_scoped_release release;
  return standard ? optimize_standard(problem, config) : optimize(problem, config);
}

py::dict stats_dict(const bench::AlgorithmStats& s) {
  py::dict d;
  d["best"] = s.best;
  d["worst"] = s.worst;
  d["mean"] = s.mean;
  d["stddev"] = s.stddev;
  d["mean_regenerations"] = s.mean_regenerations;
  d["mean_retries"] = s.mean_retries;
  d["runs"] = s.runs;
  d["failed_seeds"] = s.failed_seeds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid particle swarm optimizer for op-amp sizing";

  static py::exception<GenerationExhausted> exhausted(m, "GenerationExhausted", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const GenerationExhausted& e) {
      py::set_error(exhausted, e.what());
    }
  });
  py::register_exception<spice::SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  py::enum_<RandomDraws>(m, "RandomDraws")
      .value("per_dimension", RandomDraws::per_dimension)
      .value("scalar", RandomDraws::scalar);
  py::enum_<RetryStart>(m, "RetryStart")
      .value("chained", RetryStart::chained)
      .value("restart", RetryStart::restart);

  py::class_<PsoConfig>(m, "PsoConfig")
      .def(py::init<>())
      .def_readwrite("swarm_size", &PsoConfig::swarm_size)
      .def_readwrite("max_iterations", &PsoConfig::max_iterations)
      .def_readwrite("w_min", &PsoConfig::w_min)
      .def_readwrite("w_max", &PsoConfig::w_max)
      .def_readwrite("c1", &PsoConfig::c1)
      .def_readwrite("c2", &PsoConfig::c2)
      .def_readwrite("max_velocity_retries", &PsoConfig::max_velocity_retries)
      .def_readwrite("max_generation_attempts", &PsoConfig::max_generation_attempts)
      .def_readwrite("rng_seed", &PsoConfig::rng_seed)
      .def_readwrite("velocity_clamp", &PsoConfig::velocity_clamp)
      .def_readwrite("draws", &PsoConfig::draws)
      .def_readwrite("retry_start", &PsoConfig::retry_start)
      .def_readwrite("threads", &PsoConfig::threads)
      .def("validate", &PsoConfig::validate);

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("gbest_position", &RunResult::gbest_position)
      .def_readonly("gbest_fitness", &RunResult::gbest_fitness)
      .def_readonly("fitness_history", &RunResult::fitness_history)
      .def_readonly("inertia_history", &RunResult::inertia_history)
      .def_readonly("regenerations_per_iteration", &RunResult::regenerations_per_iteration)
      .def_readonly("retries_per_iteration", &RunResult::retries_per_iteration)
      .def_readonly("regeneration_count", &RunResult::regeneration_count)
      .def_readonly("retry_count", &RunResult::retry_count)
      .def("__eq__", [](const RunResult& a, const RunResult& b) { return a == b; });

  m.def("inertia_weight", &inertia_weight, py::arg("ite"), py::arg("config"));
  m.def(
      "update_velocity",
      [](std::vector<double> x, std::vector<double> v, std::vector<double> pbest, std::vector<double> gbest,
         double w, double c1, double c2, std::vector<double> r1, std::vector<double> r2) {
        const Particle p{std::move(x), std::move(v), std::move(pbest), 0.0};
        return update_velocity(p, gbest, w, c1, c2, r1, r2);
      },
      py::arg("x"), py::arg("v"), py::arg("pbest"), py::arg("gbest"), py::arg("w"), py::arg("c1"),
      py::arg("c2"), py::arg("r1"), py::arg("r2"));
  m.def(
      "optimize",
      [](py::object problem, std::vector<double> lower, std::vector<double> upper, const PsoConfig& config,
         bool standard) {
        const PyProblem p(std::move(problem), std::move(lower), std::move(upper));
        return run(p, config, standard);
      },
      py::arg("problem"), py::arg("lower"), py::arg("upper"), py::arg("config"), py::arg("standard") = false,
      "Minimize a Python problem exposing fitness(x) and survive(x) over the box [lower, upper].");

  auto op = m.def_submodule("opamp", "Two-stage op-amp model");
  py::class_<opamp::DesignVector>(op, "DesignVector")
      .def(py::init<>())
      .def(py::init([](double w12, double w34, double w58, double w6, double w7, double ibias) {
             return opamp::DesignVector{w12, w34, w58, w6, w7, ibias};
           }),
           py::arg("w12"), py::arg("w34"), py::arg("w58"), py::arg("w6"), py::arg("w7"), py::arg("ibias"))
      .def_readwrite("w12", &opamp::DesignVector::w12)
      .def_readwrite("w34", &opamp::DesignVector::w34)
      .def_readwrite("w58", &opamp::DesignVector::w58)
      .def_readwrite("w6", &opamp::DesignVector::w6)
      .def_readwrite("w7", &opamp::DesignVector::w7)
      .def_readwrite("ibias", &opamp::DesignVector::ibias)
      .def("to_position", [](const opamp::DesignVector& d) {
        const auto a = d.to_position();
        return std::vector<double>(a.begin(), a.end());
      })
      .def_static("from_position", [](std::vector<double> x) { return opamp::DesignVector::from_position(x); })
      .def("__eq__", [](const opamp::DesignVector& a, const opamp::DesignVector& b) { return a == b; });

  py::class_<opamp::TechParams>(op, "TechParams")
      .def(py::init<>())
      .def_readwrite("vdd", &opamp::TechParams::vdd)
      .def_readwrite("channel_length", &opamp::TechParams::channel_length)
      .def_readwrite("mu_n_cox", &opamp::TechParams::mu_n_cox)
      .def_readwrite("mu_p_cox", &opamp::TechParams::mu_p_cox)
      .def_readwrite("vth_n", &opamp::TechParams::vth_n)
      .def_readwrite("vth_p", &opamp::TechParams::vth_p)
      .def_readwrite("lambda_n", &opamp::TechParams::lambda_n)
      .def_readwrite("lambda_p", &opamp::TechParams::lambda_p)
      .def_readwrite("gamma_noise", &opamp::TechParams::gamma_noise)
      .def_readwrite("cc_ratio", &opamp::TechParams::cc_ratio)
      .def_readwrite("temperature", &opamp::TechParams::temperature);

  py::class_<opamp::SpecTable>(op, "SpecTable")
      .def(py::init<>())
      .def_readwrite("av_min", &opamp::SpecTable::av_min)
      .def_readwrite("p_max", &opamp::SpecTable::p_max)
      .def_readwrite("sr_min", &opamp::SpecTable::sr_min)
      .def_readwrite("f3db_min", &opamp::SpecTable::f3db_min)
      .def_readwrite("ugb_min", &opamp::SpecTable::ugb_min)
      .def_readwrite("pm_min", &opamp::SpecTable::pm_min)
      .def_readwrite("vcm_low", &opamp::SpecTable::vcm_low)
      .def_readwrite("vcm_high", &opamp::SpecTable::vcm_high)
      .def_readwrite("noise_max", &opamp::SpecTable::noise_max)
      .def_readwrite("noise_freq", &opamp::SpecTable::noise_freq)
      .def_readwrite("area_max", &opamp::SpecTable::area_max)
      .def_readwrite("wl_ratio_min", &opamp::SpecTable::wl_ratio_min)
      .def_readwrite("wl_ratio_max", &opamp::SpecTable::wl_ratio_max)
      .def_readwrite("c_load", &opamp::SpecTable::c_load)
      .def_readwrite("ibias_floor", &opamp::SpecTable::ibias_floor)
      .def("validate", &opamp::SpecTable::validate);

  py::class_<opamp::Metrics>(op, "Metrics")
      .def_readonly("av_db", &opamp::Metrics::av_db)
      .def_readonly("f3db", &opamp::Metrics::f3db)
      .def_readonly("ugb", &opamp::Metrics::ugb)
      .def_readonly("phase_margin", &opamp::Metrics::phase_margin)
      .def_readonly("slew_rate", &opamp::Metrics::slew_rate)
      .def_readonly("power", &opamp::Metrics::power)
      .def_readonly("noise_psd", &opamp::Metrics::noise_psd)
      .def_readonly("area", &opamp::Metrics::area);

  py::class_<opamp::EvalReport>(op, "EvalReport")
      .def_readonly("metrics", &opamp::EvalReport::metrics)
      .def_readonly("saturation_low", &opamp::EvalReport::saturation_low)
      .def_readonly("saturation_high", &opamp::EvalReport::saturation_high)
      .def_readonly("passed", &opamp::EvalReport::pass)
      .def_readonly("violations", &opamp::EvalReport::violations);

  op.def("reference_design", &opamp::reference_design);
  op.def("area", &opamp::area_fitness, py::arg("design"), py::arg("tech") = opamp::TechParams{});
  op.def("evaluate", &opamp::evaluate, py::arg("design"), py::arg("specs") = opamp::SpecTable{},
         py::arg("tech") = opamp::TechParams{});
  op.def("first_violation", &opamp::first_violation, py::arg("design"), py::arg("specs") = opamp::SpecTable{},
         py::arg("tech") = opamp::TechParams{});
  op.def("bounds", [](const opamp::SpecTable& s, const opamp::TechParams& t) {
    const auto b = opamp::derive_bounds(s, t);
    return py::make_tuple(b.lower, b.upper);
  }, py::arg("specs") = opamp::SpecTable{}, py::arg("tech") = opamp::TechParams{});
  op.def(
      "optimize",
      [](const PsoConfig& config, const opamp::SpecTable& specs, const opamp::TechParams& tech, bool standard) {
        const auto problem = opamp::as_problem(specs, tech);
        return run(*problem, config, standard);
      },
      py::arg("config"), py::arg("specs") = opamp::SpecTable{}, py::arg("tech") = opamp::TechParams{},
      py::arg("standard") = false, "Minimize area under the spec table with the analytical model.");

  auto sp = m.def_submodule("spice", "Netlist emission and simulator output parsing");
  sp.def(
      "emit_netlist",
      [](const opamp::DesignVector& dv, const std::filesystem::path& model_include, const opamp::SpecTable& specs,
         const opamp::TechParams& tech) {
        return spice::emit_netlist(dv, tech, specs, spice::NetlistTemplate::opamp(model_include));
      },
      py::arg("design"), py::arg("model_include"), py::arg("specs") = opamp::SpecTable{},
      py::arg("tech") = opamp::TechParams{});
  sp.def("parse_measurements", [](const std::string& text) { return spice::parse_measurements(text); });
  sp.def(
      "parse_results",
      [](const std::string& text, const opamp::SpecTable& specs) {
        spice::SimResult raw;
        raw.raw_stdout = text;
        raw.measured = spice::parse_measurements(text);
        return spice::parse_results(raw, specs);
      },
      py::arg("text"), py::arg("specs") = opamp::SpecTable{});
  py::register_exception<spice::ParseError>(sp, "ParseError", PyExc_ValueError);

  auto bn = m.def_submodule("bench", "Constrained benchmark problems");
  bn.def(
      "optimize_sphere",
      [](std::size_t dimension, double fraction, const PsoConfig& config, bool standard) {
        const auto problem = bench::constrained_sphere(dimension, fraction);
        return run(problem, config, standard);
      },
      py::arg("dimension"), py::arg("feasible_fraction"), py::arg("config"), py::arg("standard") = false);
  bn.def(
      "compare_sphere",
      [](std::size_t dimension, double fraction, const PsoConfig& config, std::vector<std::uint64_t> seeds) {
        const auto problem = bench::constrained_sphere(dimension, fraction);
        bench::ComparisonStats s;
        {
          py::gil_scoped_release release;
          s = bench::compare(problem, config, seeds);
        }
        py::dict d;
        d["hybrid"] = stats_dict(s.hybrid);
        d["standard"] = stats_dict(s.standard);
        d["csv"] = bench::to_csv(s);
        return d;
      },
      py::arg("dimension"), py::arg("feasible_fraction"), py::arg("config"), py::arg("seeds"));
}

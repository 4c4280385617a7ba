#include "hpso/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "hpso/bench.hpp"
#include "hpso/format.hpp"

namespace hpso::cli {
namespace {

using text::shortest;

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return shortest(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::unique_ptr<Problem> make_problem(const RunConfig& c) {
  switch (c.problem) {
    case ProblemKind::opamp_analytic:
      return opamp::as_problem(c.specs, c.tech);
    case ProblemKind::opamp_spice: {
      if (spice::find_executable(c.spice.simulator_path).empty()) {
        throw spice::SimulationError(spice::SimulationError::Kind::unavailable,
                                     "backend unavailable: " + c.spice.simulator_path.string() +
                                         " not found");
      }
      auto eval = std::make_shared<spice::SpiceEvaluator>(c.spice, c.specs, c.tech);
      return std::make_unique<opamp::OpAmpProblem>(c.specs, c.tech, std::move(eval));
    }
    case ProblemKind::bench:
      return std::make_unique<bench::ConstrainedSphere>(c.bench_dimension, c.bench_feasible_fraction);
  }
  throw std::logic_error("unhandled problem kind");
}

struct Outcome {
  std::size_t index;
  std::uint64_t seed;
  std::optional<RunResult> result;
  std::string failure;
};

// Sizing and spec-vs-achieved tables as comments, then INI sections that
// read_design() and any INI reader can consume.
std::string opamp_summary(const RunConfig& c, const Outcome& best, const opamp::EvalReport& rep) {
  const auto dv = opamp::DesignVector::from_position(best.result->gbest_position);
  const auto& s = c.specs;
  const auto& m = rep.metrics;
  const double l_nm = c.tech.channel_length * 1e9;
  std::string o;
  o += "# Best design (run " + std::to_string(best.index) + ", seed " + std::to_string(best.seed) + ")\n";
  o += "#   Transistor      W (nm)      L (nm)\n";
  auto row = [&](const char* name, double w) {
    o += "#   " + pad(name, 16) + pad(fixed(w * 1e9, 1), 12) + fixed(l_nm, 1) + "\n";
  };
  row("M1, M2", dv.w12);
  row("M3, M4", dv.w34);
  row("M5, M8", dv.w58);
  row("M6", dv.w6);
  row("M7", dv.w7);
  o += "#   " + pad("Ibias (uA)", 16) + fixed(dv.ibias * 1e6, 3) + "\n";
  o += "#\n";
  o += "#   Parameter             Specification     Obtained\n";
  auto perf = [&](const char* name, const std::string& spec, const std::string& got) {
    o += "#   " + pad(name, 22) + pad(spec, 18) + got + "\n";
  };
  perf("Gain (dB)", ">= " + fixed(s.av_min, 1), fixed(m.av_db, 2));
  perf("Power (uW)", "<= " + fixed(s.p_max * 1e6, 1), fixed(m.power * 1e6, 2));
  perf("Slew rate (V/us)", ">= " + fixed(s.sr_min * 1e-6, 1), fixed(m.slew_rate * 1e-6, 2));
  perf("f3dB (MHz)", ">= " + fixed(s.f3db_min * 1e-6, 2), fixed(m.f3db * 1e-6, 3));
  perf("UGB (MHz)", ">= " + fixed(s.ugb_min * 1e-6, 1), fixed(m.ugb * 1e-6, 2));
  perf("Phase margin (deg)", ">= " + fixed(s.pm_min, 1), fixed(m.phase_margin, 2));
  perf("ICMR (V)", fixed(s.vcm_low, 2) + " - " + fixed(s.vcm_high, 2),
       std::any_of(rep.violations.begin(), rep.violations.end(),
                   [](const std::string& v) { return v.starts_with("saturation@"); })
           ? "violated"
           : "met");
  perf("Noise (nV/rtHz)", "<= " + fixed(s.noise_max * 1e9, 1), fixed(m.noise_psd * 1e9, 3));
  perf("Area (um^2)", "<= " + fixed(s.area_max * 1e12, 3), fixed(m.area * 1e12, 5));
  o += "\n[design]\n";
  o += "w12 = " + shortest(dv.w12) + "\n";
  o += "w34 = " + shortest(dv.w34) + "\n";
  o += "w58 = " + shortest(dv.w58) + "\n";
  o += "w6 = " + shortest(dv.w6) + "\n";
  o += "w7 = " + shortest(dv.w7) + "\n";
  o += "ibias = " + shortest(dv.ibias) + "\n";
  o += "\n[metrics]\n";
  o += "av_db = " + shortest(m.av_db) + "\n";
  o += "f3db = " + shortest(m.f3db) + "\n";
  o += "ugb = " + shortest(m.ugb) + "\n";
  o += "phase_margin = " + shortest(m.phase_margin) + "\n";
  o += "slew_rate = " + shortest(m.slew_rate) + "\n";
  o += "power = " + shortest(m.power) + "\n";
  o += "noise_psd = " + shortest(m.noise_psd) + "\n";
  o += "area = " + shortest(m.area) + "\n";
  o += "\n[check]\n";
  o += std::string("pass = ") + (rep.pass ? "true" : "false") + "\n";
  o += "violations = " + opamp::join_violations(rep.violations) + "\n";
  return o;
}

std::string summary_text(const RunConfig& c, const std::vector<Outcome>& outcomes,
                         const Outcome* best, const Problem& problem) {
  std::size_t failed = 0;
  for (const auto& r : outcomes) failed += r.result ? 0 : 1;
  std::string o;
  o += "# hpso run summary: " + std::string(problem_name(c.problem)) + ", " +
       std::to_string(outcomes.size()) + " runs, swarm " + std::to_string(c.pso.swarm_size) + ", " +
       std::to_string(c.pso.max_iterations) + " iterations\n\n";
  o += "[run]\n";
  o += "problem = " + std::string(problem_name(c.problem)) + "\n";
  o += "runs = " + std::to_string(outcomes.size()) + "\n";
  o += "failed_runs = " + std::to_string(failed) + "\n";
  o += "swarm_size = " + std::to_string(c.pso.swarm_size) + "\n";
  o += "max_iterations = " + std::to_string(c.pso.max_iterations) + "\n";
  if (best != nullptr) {
    o += "best_run = " + std::to_string(best->index) + "\n";
    o += "best_seed = " + std::to_string(best->seed) + "\n";
    o += "best_fitness = " + shortest(best->result->gbest_fitness) + "\n";
  }
  o += "\n[runs]\n";
  for (const auto& r : outcomes) {
    const std::string key = run_file_name(r.index, r.seed);
    o += key.substr(0, key.size() - 4) + " = " +
         (r.result ? shortest(r.result->gbest_fitness) : "failed: " + r.failure) + "\n";
  }
  if (best == nullptr) return o;
  o += "\n";
  if (c.problem == ProblemKind::bench) {
    o += "[best]\n";
    for (std::size_t d = 0; d < best->result->gbest_position.size(); ++d) {
      o += "x" + std::to_string(d) + " = " + shortest(best->result->gbest_position[d]) + "\n";
    }
  } else {
    const auto& op = dynamic_cast<const opamp::OpAmpProblem&>(problem);
    o += opamp_summary(c, *best, op.report(best->result->gbest_position));
  }
  return o;
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const spice::TemplateError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const opamp::SpecError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

std::string run_file_name(std::size_t index, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "run_%02zu_seed_%llu.csv", index,
                static_cast<unsigned long long>(seed));
  return buf;
}

std::string convergence_csv(const RunResult& r) {
  std::string o = "iteration,gbest_fitness,w,regenerations,retries\n";
  for (std::size_t k = 0; k < r.fitness_history.size(); ++k) {
    o += std::to_string(k + 1) + "," + shortest(r.fitness_history[k]) + "," +
         shortest(r.inertia_history[k]) + "," + std::to_string(r.regenerations_per_iteration[k]) +
         "," + std::to_string(r.retries_per_iteration[k]) + "\n";
  }
  return o;
}

int run_command(const std::filesystem::path& config_path, const RunOverrides& ov, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    RunConfig c = load_config(config_path);
    if (ov.seeds) c.seeds = *ov.seeds;
    if (ov.swarm_size) c.pso.swarm_size = *ov.swarm_size;
    if (ov.max_iterations) c.pso.max_iterations = *ov.max_iterations;
    if (ov.output_dir) c.output_dir = *ov.output_dir;
    if (ov.backend) {
      if (c.problem == ProblemKind::bench) {
        throw ConfigError("backend", "only applies to the op-amp problems");
      }
      c.problem = *ov.backend;
    }
    c.validate();

    const auto problem = make_problem(c);
    std::filesystem::create_directories(c.output_dir);

    std::vector<Outcome> outcomes;
    for (std::size_t i = 0; i < c.seeds.size(); ++i) {
      Outcome o{i + 1, c.seeds[i], std::nullopt, {}};
      PsoConfig pc = c.pso;
      pc.rng_seed = o.seed;
      RunResult history;
      try {
        o.result = optimize(*problem, pc);
        history = *o.result;
      } catch (const GenerationExhausted& e) {
        o.failure = e.what();
        history = e.partial;
        err << "run " << o.index << " (seed " << o.seed << "): " << e.what() << "\n";
      }
      write_file(c.output_dir / run_file_name(o.index, o.seed), convergence_csv(history));
      outcomes.push_back(std::move(o));
    }

    const Outcome* best = nullptr;
    for (const auto& o : outcomes) {
      if (o.result && (best == nullptr || o.result->gbest_fitness < best->result->gbest_fitness)) {
        best = &o;
      }
    }
    write_file(c.output_dir / "summary.txt", summary_text(c, outcomes, best, *problem));

    if (best != nullptr) {
      if (c.problem == ProblemKind::bench) {
        out << "best fitness: " << shortest(best->result->gbest_fitness);
      } else {
        out << "best area: " << shortest(best->result->gbest_fitness * 1e12) << " um^2";
      }
      out << " (run " << best->index << ", seed " << best->seed << ")\n";
    }
    for (const auto& o : outcomes) {
      if (!o.result) return static_cast<int>(kRuntimeError);
    }
    return static_cast<int>(kSuccess);
  });
}

int export_netlist_command(const std::filesystem::path& config_path,
                           const std::optional<std::filesystem::path>& from_summary,
                           const std::optional<opamp::DesignVector>& explicit_design,
                           std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = load_config(config_path);
    if (c.problem == ProblemKind::bench) {
      throw ConfigError("run.problem", "export-netlist needs an op-amp problem");
    }
    opamp::DesignVector dv;
    if (from_summary) {
      dv = read_design(*from_summary);
    } else if (explicit_design) {
      dv = *explicit_design;
      try {
        dv.validate();
      } catch (const std::invalid_argument& e) {
        throw ConfigError("design", e.what());
      }
    } else if (c.design) {
      dv = *c.design;
    } else {
      throw ConfigError("design", "no design vector (use --from-summary, --design or a [design] section)");
    }
    std::filesystem::path models = c.spice.model_include_path;
    if (models.empty()) {
      models = "models.inc";
      err << "note: spice.model_include_path unset, netlist includes " << models.string() << "\n";
    }
    const auto netlist = spice::emit_netlist(dv, c.tech, c.specs, spice::NetlistTemplate::opamp(models));
    std::filesystem::create_directories(c.output_dir);
    const auto path = c.output_dir / "netlist.cir";
    write_file(path, netlist);
    out << path.string() << "\n";
    return static_cast<int>(kSuccess);
  });
}

int bench_command(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig c = load_config(config_path);
    if (c.seeds.size() < 2) throw ConfigError("run.seeds", "bench needs at least two seeds");
    const bench::ConstrainedSphere problem(c.bench_dimension, c.bench_feasible_fraction);
    const auto stats = bench::compare(problem, c.pso, c.seeds);
    const auto csv = bench::to_csv(stats);
    std::filesystem::create_directories(c.output_dir);
    write_file(c.output_dir / "comparison.csv", csv);
    out << problem.name() << ", " << c.seeds.size() << " seeds\n" << csv;
    const bool failures = !stats.hybrid.failed_seeds.empty() || !stats.standard.failed_seeds.empty();
    return static_cast<int>(failures ? kRuntimeError : kSuccess);
  });
}

}  // namespace hpso::cli

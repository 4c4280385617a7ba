#include <algorithm>
#include <cmath>
#include <limits>

#include "hpso/opamp.hpp"

namespace hpso::opamp {

namespace {

constexpr std::size_t kCurrentBranches = 3;  // M8 reference, M5 tail, M6/M7 output

void require(bool ok, std::vector<std::string>& violations, const char* name) {
  if (!ok) violations.emplace_back(name);
}

}  // namespace

void SpecTable::validate() const {
  if (!(vcm_low < vcm_high)) throw SpecError("vcm_low must be below vcm_high");
  if (!(wl_ratio_min >= 1.0)) throw SpecError("wl_ratio_min must be at least 1");
  if (!(c_load > 0.0)) throw SpecError("c_load must be positive");
  if (!(p_max > 0.0)) throw SpecError("p_max must be positive");
  if (!(area_max > 0.0)) throw SpecError("area_max must be positive");
  if (!(noise_max > 0.0)) throw SpecError("noise_max must be positive");
  if (!(noise_freq > 0.0)) throw SpecError("noise_freq must be positive");
  if (!(ibias_floor > 0.0)) throw SpecError("ibias_floor must be positive");
}

Bounds derive_bounds(const SpecTable& specs, const TechParams& tech) {
  specs.validate();
  tech.validate();
  const double w_lo = specs.wl_ratio_min * tech.channel_length;
  const double w_hi = specs.wl_ratio_max * tech.channel_length;
  const double i_hi = specs.p_max / (static_cast<double>(kCurrentBranches) * tech.vdd);
  if (!(w_lo < w_hi)) throw SpecError("infeasible specification: empty W/L range");
  if (!(specs.ibias_floor < i_hi)) {
    throw SpecError("infeasible specification: power budget leaves no room for ibias");
  }
  Bounds b;
  b.lower = {w_lo, w_lo, w_lo, w_lo, w_lo, specs.ibias_floor};
  b.upper = {w_hi, w_hi, w_hi, w_hi, w_hi, i_hi};
  return b;
}

Metrics unmeasured_metrics() {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  return {nan, nan, nan, nan, nan, nan, nan, nan};
}

bool EvalReport::has_violation(std::string_view name) const {
  return std::find(violations.begin(), violations.end(), name) != violations.end();
}

namespace {

void check_performance(const Metrics& m, const SpecTable& specs, std::vector<std::string>& violations) {
  require(m.av_db >= specs.av_min, violations, "av");
  require(m.power <= specs.p_max, violations, "power");
  require(m.slew_rate >= specs.sr_min, violations, "slew_rate");
  require(m.f3db >= specs.f3db_min, violations, "f3db");
  require(m.ugb >= specs.ugb_min, violations, "ugb");
  require(m.phase_margin >= specs.pm_min, violations, "phase_margin");
  require(m.noise_psd <= specs.noise_max, violations, "noise");
}

}  // namespace

void check_specs(const Metrics& m, const SpecTable& specs, std::vector<std::string>& violations) {
  check_performance(m, specs, violations);
  require(m.area <= specs.area_max, violations, "area");
}

void check_saturation_flags(const SaturationFlags& flags, std::string_view where,
                            std::vector<std::string>& violations) {
  for (std::size_t m = 0; m < kDeviceCount; ++m) {
    if (!flags[m]) {
      violations.push_back("saturation@" + std::string(where) + ":M" + std::to_string(m + 1));
    }
  }
}

void check_sizes(const DesignVector& dv, const SpecTable& specs, const TechParams& tech,
                 std::vector<std::string>& violations) {
  // Products, not ratios, so a width sitting on a derived bound passes.
  const double w_lo = specs.wl_ratio_min * tech.channel_length;
  const double w_hi = specs.wl_ratio_max * tech.channel_length;
  for (std::size_t m = 0; m < kDeviceCount; ++m) {
    const double w = dv.width(m);
    if (!(w >= w_lo && w <= w_hi)) violations.push_back("wl_ratio:M" + std::to_string(m + 1));
  }
}

namespace {

// Checks run in a fixed order; with stop_early the first failure ends the run.
// Cheap checks (sizes, area) come first since most random candidates fail there.
void run_checks(const DesignVector& dv, const SpecTable& specs, const TechParams& tech,
                bool stop_early, EvalReport& report) {
  auto& v = report.violations;
  auto& m = report.metrics;
  m.area = area_fitness(dv, tech);
  check_sizes(dv, specs, tech, v);
  if (stop_early && !v.empty()) return;
  // Area is a closed form, so it is reported ahead of the operating point in both modes.
  require(m.area <= specs.area_max, v, "area");
  if (stop_early && !v.empty()) return;

  const double vcm_mid = 0.5 * (specs.vcm_low + specs.vcm_high);
  try {
    const auto op = solve_operating_point(dv, tech, vcm_mid, specs.c_load);
    const auto ac = small_signal_unchecked(op, tech, specs.c_load);
    const auto sp = slew_and_power(dv, op, tech, specs.c_load);
    m.av_db = ac.av_db;
    m.f3db = ac.f3db;
    m.ugb = ac.ugb;
    m.phase_margin = ac.phase_margin;
    m.slew_rate = sp.slew_rate;
    m.power = sp.power;
    m.noise_psd = input_noise_psd(op, tech, specs.noise_freq);
    if (!(ac.phase_margin > 0.0)) v.emplace_back("unstable");
  } catch (const SolverError& e) {
    v.push_back(std::string(e.tag()) + "@vcm_mid");
  }
  check_performance(m, specs, v);
  if (stop_early && !v.empty()) return;

  auto endpoint = [&](double vcm, const char* where, SaturationFlags& flags) {
    try {
      flags = check_saturation(solve_operating_point(dv, tech, vcm, specs.c_load));
      check_saturation_flags(flags, where, v);
    } catch (const SolverError& e) {
      flags.fill(false);
      v.push_back(std::string(e.tag()) + "@" + where);
    }
  };
  endpoint(specs.vcm_low, "vcm_low", report.saturation_low);
  if (stop_early && !v.empty()) return;
  endpoint(specs.vcm_high, "vcm_high", report.saturation_high);
}

}  // namespace

EvalReport evaluate(const DesignVector& dv, const SpecTable& specs, const TechParams& tech) {
  EvalReport report;
  run_checks(dv, specs, tech, false, report);
  report.pass = report.violations.empty();
  return report;
}

std::optional<std::string> first_violation(const DesignVector& dv, const SpecTable& specs,
                                           const TechParams& tech) {
  EvalReport report;
  run_checks(dv, specs, tech, true, report);
  if (report.violations.empty()) return std::nullopt;
  return report.violations.front();
}

std::optional<std::string> Evaluator::first_violation(const DesignVector& dv) const {
  auto r = (*this)(dv);
  if (r.pass) return std::nullopt;
  return r.violations.empty() ? std::string("fail") : r.violations.front();
}

std::string join_violations(const std::vector<std::string>& violations) {
  std::string out;
  for (const auto& s : violations) {
    if (!out.empty()) out += ",";
    out += s;
  }
  return out;
}

OpAmpProblem::OpAmpProblem(SpecTable specs, TechParams tech,
                           std::shared_ptr<const Evaluator> evaluator)
    : specs_(specs), tech_(tech), bounds_(derive_bounds(specs, tech)), evaluator_(std::move(evaluator)) {
  if (!evaluator_) throw std::invalid_argument("OpAmpProblem needs an evaluator");
}

double OpAmpProblem::fitness(std::span<const double> x) const {
  return area_fitness(DesignVector::from_position(x), tech_);
}

EvalReport OpAmpProblem::report(std::span<const double> x) const {
  return (*evaluator_)(DesignVector::from_position(x));
}

Survival OpAmpProblem::survive(std::span<const double> x) const {
  if (!bounds_.contains(x)) return {false, "out of bounds"};
  auto failed = evaluator_->first_violation(DesignVector::from_position(x));
  if (failed) return {false, std::move(*failed)};
  return {true, {}};
}

std::unique_ptr<OpAmpProblem> as_problem(const SpecTable& specs, const TechParams& tech) {
  return std::make_unique<OpAmpProblem>(specs, tech, std::make_shared<AnalyticEvaluator>(specs, tech));
}

}  // namespace hpso::opamp

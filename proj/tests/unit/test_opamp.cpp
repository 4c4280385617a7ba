#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hpso/opamp.hpp"
#include "oracle/oracle_values.hpp"
#include "support.hpp"

using namespace hpso;
using namespace hpso::opamp;
using testing::sig6;

namespace {

// A design found by the optimizer; comfortably inside every constraint
// except the phase margin, which sits a little above 60 degrees.
DesignVector passing_design() { return {120e-9, 120e-9, 120e-9, 903e-9, 610e-9, 18.7e-6}; }

OperatingPoint synthetic_op(const oracle::DeviceCase& c, const TechParams& tech) {
  OperatingPoint op;
  for (std::size_t k = 0; k < kDeviceCount; ++k) {
    const bool pmos = k == 2 || k == 3 || k == 5;
    auto& d = op.devices[k];
    d.id = c.id[k];
    d.vov = c.vov[k];
    d.gm = 2.0 * d.id / d.vov;
    d.gds = (pmos ? tech.lambda_p : tech.lambda_n) * d.id;
  }
  return op;
}

std::vector<double> random_position(const Bounds& b, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(b.dimension());
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = b.lower[d] + u(gen) * b.range(d);
  return x;
}

}  // namespace

TEST_SUITE("opamp") {

TEST_CASE("area of the reference design") {
  const double a = area_fitness(reference_design(), TechParams{});
  const double exact = (2 * 266 + 2 * 783 + 2 * 126 + 1115 + 191) * 60e-18;
  CHECK(std::abs(a * 1e12 - 0.21936) <= 1e-6);
  CHECK(sig6(a, exact));
  CHECK(std::round(a * 1e14) / 100 == 0.22);
}

TEST_CASE("design vector plumbing") {
  const auto dv = reference_design();
  const auto x = dv.to_position();
  CHECK(DesignVector::from_position(x) == dv);
  CHECK_THROWS_AS(DesignVector::from_position(std::vector<double>(5, 1e-7)), std::invalid_argument);
  CHECK(dv.width(0) == dv.w12);
  CHECK(dv.width(1) == dv.w12);
  CHECK(dv.width(2) == dv.w34);
  CHECK(dv.width(3) == dv.w34);
  CHECK(dv.width(4) == dv.w58);
  CHECK(dv.width(5) == dv.w6);
  CHECK(dv.width(6) == dv.w7);
  CHECK(dv.width(7) == dv.w58);
  CHECK_THROWS_AS(dv.width(8), std::out_of_range);
  auto bad = dv;
  bad.w6 = -1e-9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = dv;
  bad.ibias = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("parameter validation") {
  TechParams t;
  CHECK_NOTHROW(t.validate());
  t.vth_p = 0.35;
  CHECK_THROWS_AS(t.validate(), SpecError);
  t = {};
  t.cc_ratio = 0.0;
  CHECK_THROWS_AS(t.validate(), SpecError);
  SpecTable s;
  CHECK_NOTHROW(s.validate());
  s.vcm_low = 1.2;
  CHECK_THROWS_AS(s.validate(), SpecError);
  s = {};
  s.c_load = 0.0;
  CHECK_THROWS_AS(s.validate(), SpecError);
}

TEST_CASE("derived search bounds") {
  const auto b = derive_bounds(SpecTable{}, TechParams{});
  REQUIRE(b.dimension() == kDimension);
  for (std::size_t d = 0; d < 5; ++d) {
    CHECK(b.lower[d] == 2.0 * 60e-9);
    CHECK(b.upper[d] == 200.0 * 60e-9);
  }
  CHECK(b.lower[5] == 1e-6);
  CHECK(sig6(b.upper[5], 400e-6 / (3 * 1.1)));
  SpecTable tight;
  tight.p_max = 1e-6;
  CHECK_THROWS_WITH_AS(derive_bounds(tight, TechParams{}), doctest::Contains("infeasible specification"),
                       SpecError);
  SpecTable empty;
  empty.wl_ratio_max = empty.wl_ratio_min;
  CHECK_THROWS_AS(derive_bounds(empty, TechParams{}), SpecError);
}

TEST_CASE("square-law drain current oracle") {
  for (const auto& c : oracle::kDrainCurrent) {
    CAPTURE(c.vgs);
    CAPTURE(c.vds);
    CHECK(sig6(drain_current(c.k, c.vgs, c.vth, c.vds, c.lambda), c.id));
  }
  // Continuous across the triode/saturation boundary.
  const double k = 2e-3, vth = 0.35, vgs = 0.6, vov = vgs - vth;
  CHECK(testing::rel_close(drain_current(k, vgs, vth, vov * (1 - 1e-12), 0.5),
                           drain_current(k, vgs, vth, vov, 0.5), 1e-10));
  CHECK(drain_current(k, 0.2, vth, 0.5, 0.5) == 0.0);
  CHECK(drain_current(k, 0.6, vth, 0.0, 0.5) == 0.0);
}

TEST_CASE("small-signal formula oracle") {
  const TechParams tech;
  const SpecTable specs;
  for (const auto& c : oracle::kMetrics) {
    const auto op = synthetic_op(c.dev, tech);
    CHECK(sig6(op.device(1).gm, c.gm1));
    CHECK(sig6(op.device(2).gds, c.gds2));
    const auto ac = small_signal_unchecked(op, tech, specs.c_load);
    CHECK(sig6(ac.av_linear, c.av_linear));
    CHECK(sig6(ac.av_db, c.av_db));
    CHECK(sig6(ac.ugb, c.ugb));
    CHECK(sig6(ac.f3db, c.f3db));
    CHECK(sig6(ac.phase_margin, c.phase_margin));
    DesignVector dv = reference_design();
    dv.ibias = c.ibias;
    const auto sp = slew_and_power(dv, op, tech, specs.c_load);
    CHECK(sig6(sp.slew_rate, c.slew_rate));
    CHECK(sig6(sp.power, c.power));
    CHECK(sig6(input_noise_psd(op, tech, specs.noise_freq), c.noise_psd));
  }
}

TEST_CASE("operating point matches the simultaneous KCL solve") {
  const TechParams tech;
  const SpecTable specs;
  const auto dv = reference_design();
  for (const auto& c : oracle::kReferenceOp) {
    CAPTURE(c.vcm);
    const auto op = solve_operating_point(dv, tech, c.vcm, specs.c_load);
    CHECK(sig6(op.v_bias, c.v_bias));
    CHECK(sig6(op.v_tail, c.v_tail));
    CHECK(sig6(op.v_d1, c.v_d1));
    CHECK(sig6(op.v_first, c.v_first));
    CHECK(sig6(op.v_out, c.v_out));
    for (std::size_t k = 0; k < kDeviceCount; ++k) CHECK(sig6(op.devices[k].id, c.id[k]));
    for (double r : op.kcl_residuals(dv.ibias)) CHECK(std::abs(r) < 1e-12);
    for (const auto& d : op.devices) {
      CHECK(d.gm == doctest::Approx(2.0 * d.id / d.vov).epsilon(1e-15));
    }
    CHECK(op.device(5).gds == tech.lambda_n * op.device(5).id);
    CHECK(op.device(6).gds == tech.lambda_p * op.device(6).id);

    const auto ac = small_signal_unchecked(op, tech, specs.c_load);
    const auto sp = slew_and_power(dv, op, tech, specs.c_load);
    CHECK(sig6(ac.av_db, c.av_db));
    CHECK(sig6(ac.ugb, c.ugb));
    CHECK(sig6(ac.f3db, c.f3db));
    CHECK(sig6(ac.phase_margin, c.phase_margin));
    CHECK(sig6(sp.slew_rate, c.slew_rate));
    CHECK(sig6(sp.power, c.power));
    CHECK(sig6(input_noise_psd(op, tech, specs.noise_freq), c.noise_psd));
  }
}

TEST_CASE("solver error paths") {
  const TechParams tech;
  auto dv = reference_design();
  SUBCASE("input pair below threshold") {
    try {
      solve_operating_point(dv, tech, 0.3, 200e-15);
      FAIL("expected cutoff");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverError::Kind::cutoff);
      CHECK(std::string(e.tag()) == "cutoff");
    }
  }
  SUBCASE("bias device cannot carry the current") {
    dv.w58 = 120e-9;
    dv.ibias = 5e-3;  // M8 tops out near 2.1 mA with its gate at vdd
    try {
      solve_operating_point(dv, tech, 0.8, 200e-15);
      FAIL("expected no-convergence");
    } catch (const SolverError& e) {
      CHECK(e.kind() == SolverError::Kind::no_convergence);
      CHECK(std::string(e.tag()) == "no-convergence");
    }
  }
  SUBCASE("zero bias current") {
    dv.ibias = 0.0;
    CHECK_THROWS_AS(solve_operating_point(dv, tech, 0.8, 200e-15), SolverError);
  }
}

TEST_CASE("saturation boundary is inclusive") {
  OperatingPoint op;
  for (auto& d : op.devices) {
    d.vov = 0.2;
    d.vds = 0.2;
  }
  CHECK(check_saturation(op) == SaturationFlags{true, true, true, true, true, true, true, true});
  op.devices[6].vds = std::nextafter(0.2, 0.0);
  const auto f = check_saturation(op);
  CHECK_FALSE(f[6]);
  CHECK(f[5]);
  std::vector<std::string> v;
  check_saturation_flags(f, "vcm_high", v);
  CHECK(v == std::vector<std::string>{"saturation@vcm_high:M7"});
}

TEST_CASE("stability check") {
  TechParams tech;
  oracle::DeviceCase c = oracle::kMetrics[0].dev;
  c.id[5] = 1e-9;  // starve the second stage: p2 far below UGB
  const auto op = synthetic_op(c, tech);
  CHECK(small_signal_unchecked(op, tech, 200e-15).phase_margin <= 0.0);
  CHECK_THROWS_AS(small_signal(op, tech, 200e-15), UnstableError);
  CHECK_NOTHROW(small_signal(synthetic_op(oracle::kMetrics[0].dev, tech), tech, 200e-15));
}

TEST_CASE("spec comparison is inclusive and NaN fails") {
  const SpecTable s;
  Metrics at{s.av_min, s.f3db_min, s.ugb_min, s.pm_min, s.sr_min, s.p_max, s.noise_max, s.area_max};
  std::vector<std::string> v;
  check_specs(at, s, v);
  CHECK(v.empty());

  auto fails = [&](Metrics m) {
    std::vector<std::string> out;
    check_specs(m, s, out);
    return out;
  };
  auto m = at; m.av_db = std::nextafter(s.av_min, 0.0);
  CHECK(fails(m) == std::vector<std::string>{"av"});
  m = at; m.power = std::nextafter(s.p_max, 1.0);
  CHECK(fails(m) == std::vector<std::string>{"power"});
  m = at; m.slew_rate *= 0.5;
  CHECK(fails(m) == std::vector<std::string>{"slew_rate"});
  m = at; m.f3db *= 0.5;
  CHECK(fails(m) == std::vector<std::string>{"f3db"});
  m = at; m.ugb *= 0.5;
  CHECK(fails(m) == std::vector<std::string>{"ugb"});
  m = at; m.phase_margin = 59.9;
  CHECK(fails(m) == std::vector<std::string>{"phase_margin"});
  m = at; m.noise_psd *= 2.0;
  CHECK(fails(m) == std::vector<std::string>{"noise"});
  m = at; m.area *= 2.0;
  CHECK(fails(m) == std::vector<std::string>{"area"});
  CHECK(fails(unmeasured_metrics()).size() == 8);
}

TEST_CASE("size check works on W vs ratio*L products") {
  const SpecTable s;
  const TechParams t;
  std::vector<std::string> v;
  DesignVector dv{s.wl_ratio_min * t.channel_length, s.wl_ratio_max * t.channel_length, 1e-6, 1e-6, 1e-6, 1e-5};
  check_sizes(dv, s, t, v);
  CHECK(v.empty());
  dv.w6 = 20e-6;
  dv.w12 = 60e-9;
  check_sizes(dv, s, t, v);
  CHECK(v == std::vector<std::string>{"wl_ratio:M1", "wl_ratio:M2", "wl_ratio:M6"});
}

TEST_CASE("evaluate on known designs") {
  const SpecTable s;
  const TechParams t;
  SUBCASE("reference sizes fail on phase margin under the square-law model") {
    const auto r = evaluate(reference_design(), s, t);
    CHECK_FALSE(r.pass);
    CHECK(r.has_violation("phase_margin"));
    CHECK(sig6(r.metrics.area, area_fitness(reference_design(), t)));
    CHECK(sig6(r.metrics.phase_margin, oracle::kReferenceOp[1].phase_margin));
    CHECK(first_violation(reference_design(), s, t) == r.violations.front());
  }
  SUBCASE("an optimized design passes everything") {
    const auto r = evaluate(passing_design(), s, t);
    CHECK(r.pass);
    CHECK(r.violations.empty());
    CHECK(r.saturation_low == SaturationFlags{true, true, true, true, true, true, true, true});
    CHECK(r.saturation_high == SaturationFlags{true, true, true, true, true, true, true, true});
    CHECK_FALSE(first_violation(passing_design(), s, t).has_value());
  }
  SUBCASE("oversized devices are reported by name") {
    auto dv = passing_design();
    dv.w7 = 13e-6;
    const auto r = evaluate(dv, s, t);
    CHECK(r.has_violation("wl_ratio:M7"));
    CHECK(first_violation(dv, s, t) == std::string("wl_ratio:M7"));
  }
  SUBCASE("an input pair that cuts off at the low end") {
    SpecTable low = s;
    low.vcm_low = 0.3;
    const auto r = evaluate(passing_design(), low, t);
    CHECK(r.has_violation("cutoff@vcm_low"));
    CHECK(r.saturation_low == SaturationFlags{});
  }
}

TEST_CASE("property: short-circuit check agrees with the full report") {
  const SpecTable s;
  const TechParams t;
  const auto b = derive_bounds(s, t);
  std::mt19937_64 gen(11);
  std::size_t passes = 0;
  for (int i = 0; i < 4000; ++i) {
    auto x = random_position(b, gen);
    // Half the samples from a small box around a feasible design, where passes occur.
    if (i % 2 == 0) {
      const auto base = passing_design().to_position();
      std::uniform_real_distribution<double> jitter(0.85, 1.15);
      for (std::size_t d = 0; d < x.size(); ++d) x[d] = base[d] * jitter(gen);
    }
    const auto dv = DesignVector::from_position(x);
    const auto full = evaluate(dv, s, t);
    const auto first = first_violation(dv, s, t);
    REQUIRE(full.pass == !first.has_value());
    if (first) CHECK(full.violations.front() == *first);
    passes += full.pass ? 1 : 0;
  }
  CHECK(passes > 0);
}

TEST_CASE("property: monotone responses") {
  const SpecTable s;
  const TechParams t;
  const auto dv = passing_design();
  const double vcm = 0.8;
  SUBCASE("more bias current, more power and slew") {
    double prev_p = 0.0, prev_sr = 0.0;
    for (double scale : {0.6, 0.8, 1.0, 1.2, 1.4}) {
      auto d = dv;
      d.ibias *= scale;
      const auto op = solve_operating_point(d, t, vcm, s.c_load);
      const auto sp = slew_and_power(d, op, t, s.c_load);
      CHECK(sp.power > prev_p);
      CHECK(sp.slew_rate > prev_sr);
      prev_p = sp.power;
      prev_sr = sp.slew_rate;
    }
  }
  SUBCASE("larger compensation capacitor, lower UGB") {
    const auto op = solve_operating_point(dv, t, vcm, s.c_load);
    double prev = std::numeric_limits<double>::infinity();
    for (double ratio : {0.1, 0.2, 0.3, 0.5, 0.8}) {
      TechParams tt = t;
      tt.cc_ratio = ratio;
      const double ugb = small_signal_unchecked(op, tt, s.c_load).ugb;
      CHECK(ugb < prev);
      prev = ugb;
    }
  }
  SUBCASE("area grows with every width") {
    for (std::size_t d = 0; d < 5; ++d) {
      auto x = dv.to_position();
      const double a0 = area_fitness(DesignVector::from_position(x), t);
      x[d] *= 1.1;
      CHECK(area_fitness(DesignVector::from_position(x), t) > a0);
    }
  }
}

TEST_CASE("op-amp problem through the engine interface") {
  const auto problem = as_problem(SpecTable{}, TechParams{});
  const auto x = passing_design().to_position();
  CHECK(problem->fitness(x) == area_fitness(passing_design(), TechParams{}));
  CHECK(problem->survive(x).pass);
  auto outside = x;
  outside[5] = 1.0;
  const auto verdict = problem->survive(outside);
  CHECK_FALSE(verdict.pass);
  CHECK(verdict.diagnostic == "out of bounds");
  CHECK(problem->report(x).pass);
  CHECK_THROWS_AS(OpAmpProblem(SpecTable{}, TechParams{}, nullptr), std::invalid_argument);
  CHECK(join_violations({"a", "b"}) == "a,b");
}

}  // TEST_SUITE

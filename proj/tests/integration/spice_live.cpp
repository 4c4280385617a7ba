// Runs the built-in deck through a real ngspice with square-law models and
// compares against the analytical backend. Exits 77 (skipped) without ngspice.
#include <cmath>
#include <cstdio>

#include "hpso/spice.hpp"

using namespace hpso;

int main() {
  const auto sim = spice::find_executable("ngspice");
  if (sim.empty()) {
    std::puts("ngspice not found; skipping");
    return 77;
  }
  const opamp::SpecTable specs;
  const opamp::TechParams tech;
  const opamp::DesignVector dv{120e-9, 120e-9, 120e-9, 903e-9, 610e-9, 18.7e-6};
  spice::SpiceEvaluator ev({sim, HPSO_TEST_DATA_DIR "/square_law.lib", 60.0}, specs, tech);
  const auto live = ev(dv);
  const auto model = opamp::evaluate(dv, specs, tech);
  int failures = 0;
  for (const auto& v : live.violations) {
    if (v.starts_with("parse error") || v.starts_with("simulation")) {
      std::printf("FAIL %s\n", v.c_str());
      ++failures;
    }
  }
  auto near = [&](const char* name, double a, double b, double tol) {
    const bool ok = std::abs(a - b) <= tol;
    std::printf("%s %s live=%.6g model=%.6g\n", ok ? "ok  " : "FAIL", name, a, b);
    failures += ok ? 0 : 1;
  };
  // Same square law on both sides; gain and bandwidth agree closely.
  near("av_db", live.metrics.av_db, model.metrics.av_db, 0.5);
  near("ugb/1e6", live.metrics.ugb / 1e6, model.metrics.ugb / 1e6, 0.1 * model.metrics.ugb / 1e6);
  near("power*1e6", live.metrics.power * 1e6, model.metrics.power * 1e6, 0.02 * model.metrics.power * 1e6);
  near("area*1e15", live.metrics.area * 1e15, model.metrics.area * 1e15, 1e-6);
  return failures == 0 ? 0 : 1;
}

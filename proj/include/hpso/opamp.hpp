#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpso/pso.hpp"

// Two-stage Miller-compensated op-amp:
//   M1/M2  NMOS input pair, sources on the tail node
//   M3/M4  PMOS mirror load (M3 diode-connected)
//   M5     NMOS tail current source, mirrored from M8
//   M6     PMOS common-source second stage, gate on the first-stage output
//   M7     NMOS current-source load of M6, mirrored from M8
//   M8     NMOS diode carrying ibias
// Cc bridges the first-stage output and the amplifier output.
namespace hpso::opamp {

inline constexpr std::size_t kDeviceCount = 8;
inline constexpr std::size_t kDimension = 6;

/// Decision vector. Matched pairs share one width: W1=W2, W3=W4, W5=W8.
struct DesignVector {
  double w12 = 0.0;  // m
  double w34 = 0.0;
  double w58 = 0.0;
  double w6 = 0.0;
  double w7 = 0.0;
  double ibias = 0.0;  // A

  /// Position ordering used by the optimizer: [w12, w34, w58, w6, w7, ibias].
  std::array<double, kDimension> to_position() const { return {w12, w34, w58, w6, w7, ibias}; }
  static DesignVector from_position(std::span<const double> x);

  /// Width of device M1..M8 (index 0..7).
  double width(std::size_t device) const;
  void validate() const;

  bool operator==(const DesignVector&) const = default;
};

/// The 0.218 um^2 optimum reported for the 65 nm design.
DesignVector reference_design();

/// Square-law device parameters. The defaults are illustrative; only vdd,
/// channel_length and cc_ratio correspond to a real process choice.
struct TechParams {
  double vdd = 1.1;
  double channel_length = 60e-9;
  double mu_n_cox = 1.0e-3;  // A/V^2
  double mu_p_cox = 0.5e-3;
  double vth_n = 0.35;
  double vth_p = -0.35;
  double lambda_n = 2.5;  // 1/V
  double lambda_p = 2.5;
  double gamma_noise = 1.0;
  double cc_ratio = 0.3;
  double temperature = 300.0;  // K

  double cc(double c_load) const { return cc_ratio * c_load; }
  void validate() const;
};

struct SpecTable {
  double av_min = 20.0;        // dB
  double p_max = 400e-6;       // W
  double sr_min = 100e6;       // V/s
  double f3db_min = 10e6;      // Hz
  double ugb_min = 100e6;      // Hz
  double pm_min = 60.0;        // degrees
  double vcm_low = 0.6;        // V
  double vcm_high = 1.0;       // V
  double noise_max = 60e-9;    // V/sqrt(Hz)
  double noise_freq = 1e6;     // Hz, frequency at which noise_max applies
  double area_max = 1e-12;     // m^2
  double wl_ratio_min = 2.0;
  double wl_ratio_max = 200.0;
  double c_load = 200e-15;     // F
  double ibias_floor = 1e-6;   // A, lower search bound for ibias

  void validate() const;
};

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DeviceOp {
  double id = 0.0;   // drain current magnitude
  double vgs = 0.0;  // magnitudes for PMOS (V_SG, V_SD)
  double vds = 0.0;
  double vov = 0.0;
  double gm = 0.0;
  double gds = 0.0;
};

struct OperatingPoint {
  std::array<DeviceOp, kDeviceCount> devices{};  // M1..M8
  double vcm = 0.0;
  double v_bias = 0.0;   // gates of M5, M7, M8
  double v_tail = 0.0;   // sources of M1/M2
  double v_d1 = 0.0;     // drain of M1/M3, gates of M3/M4
  double v_first = 0.0;  // drain of M2/M4, gate of M6
  double v_out = 0.0;

  const DeviceOp& device(std::size_t m) const { return devices.at(m - 1); }

  /// Net current into each solved node: bias, tail, d1, first-stage output, output.
  std::array<double, 5> kcl_residuals(double ibias) const;
};

class SolverError : public std::runtime_error {
 public:
  enum class Kind { no_convergence, cutoff };
  SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }
  /// "no-convergence" or "cutoff".
  const char* tag() const { return kind_ == Kind::cutoff ? "cutoff" : "no-convergence"; }

 private:
  Kind kind_;
};

class UnstableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sum of W*L over all eight devices.
double area_fitness(const DesignVector& dv, const TechParams& tech);

/// Search box: widths from the W/L range, ibias up to p_max shared by three
/// equal branches.
Bounds derive_bounds(const SpecTable& specs, const TechParams& tech);

/// Square-law drain current with channel-length modulation, including triode.
/// `k` is mu*Cox*W/L; voltages are magnitudes.
double drain_current(double k, double vgs, double vth, double vds, double lambda);

/// DC solution of the amplifier with both inputs at vcm. c_load does not
/// affect the DC point.
OperatingPoint solve_operating_point(const DesignVector& dv, const TechParams& tech, double vcm,
                                     double c_load);

using SaturationFlags = std::array<bool, kDeviceCount>;

/// True where |V_DS| >= |V_ov| (the boundary counts as saturated).
SaturationFlags check_saturation(const OperatingPoint& op);

struct AcMetrics {
  double av_linear = 0.0;
  double av_db = 0.0;
  double f3db = 0.0;
  double ugb = 0.0;
  double phase_margin = 0.0;
};

/// Miller-approximation gain, poles and phase margin. Throws UnstableError
/// when the phase margin is not positive.
AcMetrics small_signal(const OperatingPoint& op, const TechParams& tech, double c_load);
/// small_signal without the stability check.
AcMetrics small_signal_unchecked(const OperatingPoint& op, const TechParams& tech, double c_load);

struct SlewPower {
  double slew_rate = 0.0;
  double power = 0.0;
};

SlewPower slew_and_power(const DesignVector& dv, const OperatingPoint& op, const TechParams& tech,
                         double c_load);

/// Thermal-only input-referred noise of the first stage, V/sqrt(Hz).
double input_noise_psd(const OperatingPoint& op, const TechParams& tech, double freq);

/// Everything the specification check compares. NaN marks a metric that
/// could not be computed and always fails its check.
struct Metrics {
  double av_db;
  double f3db;
  double ugb;
  double phase_margin;
  double slew_rate;
  double power;
  double noise_psd;
  double area;
};

Metrics unmeasured_metrics();

struct EvalReport {
  Metrics metrics = unmeasured_metrics();
  SaturationFlags saturation_low{};   // at vcm_low
  SaturationFlags saturation_high{};  // at vcm_high
  bool pass = false;
  std::vector<std::string> violations;

  bool has_violation(std::string_view name) const;
};

/// Shared comparison stage of both survivability backends. Appends one
/// named entry per failed inequality; every comparison is inclusive.
void check_specs(const Metrics& m, const SpecTable& specs, std::vector<std::string>& violations);

/// Appends "saturation@<where>:M<k>" for each device not in saturation.
void check_saturation_flags(const SaturationFlags& flags, std::string_view where,
                            std::vector<std::string>& violations);

/// Appends "wl_ratio:M<k>" for each device outside the W/L range.
void check_sizes(const DesignVector& dv, const SpecTable& specs, const TechParams& tech,
                 std::vector<std::string>& violations);

/// Analytical survivability test, in order: W/L limits, area, the midpoint
/// operating point with its AC/slew/power/noise specs, then saturation at
/// vcm_low and vcm_high.
EvalReport evaluate(const DesignVector& dv, const SpecTable& specs, const TechParams& tech);

/// Runs the same checks as evaluate() but stops at the first failure and
/// returns its name; nullopt exactly when evaluate().pass is true.
std::optional<std::string> first_violation(const DesignVector& dv, const SpecTable& specs,
                                           const TechParams& tech);

/// Survivability backend used by OpAmpProblem.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual EvalReport operator()(const DesignVector& dv) const = 0;
  /// First failed check, or nullopt on a pass. Backends may override with a
  /// cheaper short-circuiting path.
  virtual std::optional<std::string> first_violation(const DesignVector& dv) const;
};

class AnalyticEvaluator : public Evaluator {
 public:
  AnalyticEvaluator(SpecTable specs, TechParams tech) : specs_(specs), tech_(tech) {}
  EvalReport operator()(const DesignVector& dv) const override { return evaluate(dv, specs_, tech_); }
  std::optional<std::string> first_violation(const DesignVector& dv) const override {
    return opamp::first_violation(dv, specs_, tech_);
  }

 private:
  SpecTable specs_;
  TechParams tech_;
};

/// Area minimization under the spec table, seen through the engine interface.
class OpAmpProblem : public Problem {
 public:
  OpAmpProblem(SpecTable specs, TechParams tech, std::shared_ptr<const Evaluator> evaluator);

  double fitness(std::span<const double> x) const override;
  Survival survive(std::span<const double> x) const override;
  Bounds bounds() const override { return bounds_; }

  const SpecTable& specs() const { return specs_; }
  const TechParams& tech() const { return tech_; }
  EvalReport report(std::span<const double> x) const;

 private:
  SpecTable specs_;
  TechParams tech_;
  Bounds bounds_;
  std::shared_ptr<const Evaluator> evaluator_;
};

/// The op-amp problem backed by the analytical evaluator.
std::unique_ptr<OpAmpProblem> as_problem(const SpecTable& specs, const TechParams& tech);

std::string join_violations(const std::vector<std::string>& violations);

}  // namespace hpso::opamp

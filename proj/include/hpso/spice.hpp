#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hpso/opamp.hpp"

// Survivability through an external SPICE simulator: render a netlist for
// the op-amp, run the simulator in batch mode, read "name = value" lines.
namespace hpso::spice {

/// Netlist text with {{name}} placeholders.
///
/// Recognised names: w12 w34 w58 w6 w7 ibias (design vector), l vdd cc
/// (technology; l is channel_length, cc = cc_ratio * c_load), c_load vcm_low
/// vcm_high vcm_mid noise_freq (specification), area and model_include.
struct NetlistTemplate {
  std::string template_text;
  std::filesystem::path model_include_path;

  /// The built-in two-stage op-amp deck. Device models are expected to be
  /// named `nch` and `pch` in the included file.
  static NetlistTemplate opamp(std::filesystem::path model_include_path);

  std::vector<std::string> placeholders() const;
  /// Throws TemplateError for a placeholder outside the recognised set.
  void validate() const;
};

const std::vector<std::string>& known_placeholders();

class TemplateError : public std::runtime_error {
 public:
  TemplateError(std::string placeholder, const std::string& what)
      : std::runtime_error(what), placeholder_(std::move(placeholder)) {}
  const std::string& placeholder() const { return placeholder_; }

 private:
  std::string placeholder_;
};

/// Engineering-suffix rendering that parses back to exactly `value`.
/// format_scaled(266e-9, 1e-9, 'n') == "266n".
std::string format_scaled(double value, double scale, char suffix);

/// Renders the template. The built-in template must reference every design
/// variable; a missing ibias or width is reported as a TemplateError.
std::string emit_netlist(const opamp::DesignVector& dv, const opamp::TechParams& tech,
                         const opamp::SpecTable& specs, const NetlistTemplate& tmpl);

struct SimResult {
  std::string raw_stdout;
  std::map<std::string, double> measured;
  int exit_status = 0;
};

class SimulationError : public std::runtime_error {
 public:
  enum class Kind { timeout, failed, unavailable };
  SimulationError(Kind kind, const std::string& what, std::string output = {})
      : std::runtime_error(what), kind_(kind), output_(std::move(output)) {}
  Kind kind() const { return kind_; }
  const std::string& output() const { return output_; }

 private:
  Kind kind_;
  std::string output_;
};

/// Looks `simulator` up (PATH search when it has no slash). Empty when absent.
std::filesystem::path find_executable(const std::filesystem::path& simulator);

/// Writes the netlist into a fresh temporary directory and runs
/// `<simulator> -b circuit.cir` there with stdout and stderr captured.
/// Throws SimulationError: unavailable (no executable), timeout (including
/// timeout_seconds <= 0), failed (nonzero exit; output attached).
SimResult run_simulator(const std::string& netlist, const std::filesystem::path& simulator,
                        double timeout_seconds);

/// Every "name = number" line; the first occurrence of a name wins.
std::map<std::string, double> parse_measurements(std::string_view text);

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::string metric)
      : std::runtime_error("parse error: " + metric), metric_(std::move(metric)) {}
  const std::string& metric() const { return metric_; }

 private:
  std::string metric_;
};

/// Names the built-in deck prints: metrics, slew inputs and the per-device
/// saturation quantities at both ICMR ends.
const std::vector<std::string>& required_measurements();

/// Builds the report from measured values using the same comparison stage
/// as the analytical backend. Throws ParseError for a missing measurement.
opamp::EvalReport parse_results(const SimResult& raw, const opamp::SpecTable& specs);

struct SpiceConfig {
  std::filesystem::path simulator_path = "ngspice";
  std::filesystem::path model_include_path;
  double timeout_seconds = 30.0;
};

/// Evaluator running one simulation per call. A timeout, simulator failure
/// or unparsable output counts as a failed survivability test;
/// SimulationError::unavailable propagates.
class SpiceEvaluator : public opamp::Evaluator {
 public:
  SpiceEvaluator(SpiceConfig config, opamp::SpecTable specs, opamp::TechParams tech);
  SpiceEvaluator(SpiceConfig config, NetlistTemplate tmpl, opamp::SpecTable specs,
                 opamp::TechParams tech);

  opamp::EvalReport operator()(const opamp::DesignVector& dv) const override;

 private:
  SpiceConfig config_;
  NetlistTemplate template_;
  opamp::SpecTable specs_;
  opamp::TechParams tech_;
};

}  // namespace hpso::spice

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpso/opamp.hpp"
#include "hpso/pso.hpp"
#include "hpso/spice.hpp"

namespace hpso {

enum class ProblemKind { opamp_analytic, opamp_spice, bench };

/// "opamp-analytic", "opamp-spice" or "bench".
std::string_view problem_name(ProblemKind kind);
/// Throws ConfigError("problem", ...) listing the accepted names.
ProblemKind parse_problem(std::string_view name);

/// Environment variable consulted for spice.simulator_path when the config
/// file does not set it.
inline constexpr const char* kSimulatorEnv = "HPSO_SIMULATOR";

/// Retry and generation budgets used for the op-amp problems when [pso]
/// leaves them unset; feasible random draws are rare there.
inline constexpr std::size_t kOpampVelocityRetries = 100;
inline constexpr std::size_t kOpampGenerationAttempts = 1000000;

struct RunConfig {
  ProblemKind problem = ProblemKind::opamp_analytic;
  PsoConfig pso;
  opamp::SpecTable specs;
  opamp::TechParams tech;
  spice::SpiceConfig spice;
  std::size_t bench_dimension = 6;
  double bench_feasible_fraction = 0.5;
  std::filesystem::path output_dir = "hpso-out";
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  /// Values of an optional [design] section.
  std::optional<opamp::DesignVector> design;

  /// Checks every field; throws ConfigError naming the first bad one.
  void validate() const;
};

/// Parses INI text. Relative paths are resolved against `base_dir`.
/// Throws ConfigError naming the offending "section.key".
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// "1,2,3" -> {1, 2, 3}. Throws ConfigError(field, ...).
std::vector<std::uint64_t> parse_seed_list(std::string_view text, const std::string& field = "seeds");

/// Reads the [design] section of a summary (or config) file.
opamp::DesignVector read_design(const std::filesystem::path& path);

}  // namespace hpso

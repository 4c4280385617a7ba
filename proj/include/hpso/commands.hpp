#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hpso/config.hpp"

namespace hpso::cli {

enum ExitCode : int { kSuccess = 0, kConfigError = 1, kRuntimeError = 2 };

struct RunOverrides {
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<std::size_t> swarm_size;
  std::optional<std::size_t> max_iterations;
  std::optional<std::filesystem::path> output_dir;
  std::optional<ProblemKind> backend;  // opamp_analytic or opamp_spice
};

/// Convergence log of one run: iteration,gbest_fitness,w,regenerations,retries.
std::string convergence_csv(const RunResult& result);

/// "run_<index>_seed_<seed>.csv" with a two-digit, 1-based index.
std::string run_file_name(std::size_t index, std::uint64_t seed);

/// Executes one optimization per seed, writes the CSV logs and summary.txt
/// into the output directory and prints the best fitness (the area in um^2
/// for the op-amp).
int run_command(const std::filesystem::path& config_path, const RunOverrides& overrides,
                std::ostream& out, std::ostream& err);

/// Writes netlist.cir for a design read from a summary file, from
/// `explicit_design`, or from the config's [design] section, in that order.
int export_netlist_command(const std::filesystem::path& config_path,
                           const std::optional<std::filesystem::path>& from_summary,
                           const std::optional<opamp::DesignVector>& explicit_design,
                           std::ostream& out, std::ostream& err);

/// Hybrid against standard PSO on the configured benchmark; writes comparison.csv.
int bench_command(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

}  // namespace hpso::cli

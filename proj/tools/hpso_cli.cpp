#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hpso/commands.hpp"

namespace {

hpso::opamp::DesignVector parse_design(const std::string& text) {
  std::vector<double> x;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) x.push_back(std::stod(item));
  return hpso::opamp::DesignVector::from_position(x);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid PSO sizing of a two-stage Miller op-amp"};
  app.require_subcommand(1);

  std::string config;
  std::string seeds;
  std::size_t swarm = 0;
  std::size_t iters = 0;
  std::string out_dir;
  std::string backend;
  auto* run = app.add_subcommand("run", "Optimize once per seed; write convergence CSVs and a summary");
  run->add_option("--config", config, "INI configuration file")->required();
  run->add_option("--seeds", seeds, "Comma-separated seed list");
  run->add_option("--swarm", swarm, "Swarm size")->check(CLI::PositiveNumber);
  run->add_option("--iters", iters, "Iteration count")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "Output directory");
  run->add_option("--backend", backend, "Survivability backend")->check(CLI::IsMember({"analytic", "spice"}));

  std::string summary;
  std::string design;
  auto* exp = app.add_subcommand("export-netlist", "Write a SPICE netlist for a design vector");
  exp->add_option("--config", config, "INI configuration file")->required();
  auto* from = exp->add_option("--from-summary", summary, "summary.txt of a finished run");
  exp->add_option("--design", design, "w12,w34,w58,w6,w7,ibias in SI units")->excludes(from);

  auto* bench = app.add_subcommand("bench", "Compare hybrid and standard PSO on the benchmark");
  bench->add_option("--config", config, "INI configuration file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hpso::cli::kConfigError;
  }

  if (*run) {
    hpso::cli::RunOverrides ov;
    try {
      if (!seeds.empty()) ov.seeds = hpso::parse_seed_list(seeds, "--seeds");
    } catch (const hpso::ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return hpso::cli::kConfigError;
    }
    if (run->count("--swarm")) ov.swarm_size = swarm;
    if (run->count("--iters")) ov.max_iterations = iters;
    if (!out_dir.empty()) ov.output_dir = out_dir;
    if (!backend.empty()) {
      ov.backend = backend == "spice" ? hpso::ProblemKind::opamp_spice : hpso::ProblemKind::opamp_analytic;
    }
    return hpso::cli::run_command(config, ov, std::cout, std::cerr);
  }
  if (*exp) {
    std::optional<std::filesystem::path> from_summary;
    std::optional<hpso::opamp::DesignVector> dv;
    if (!summary.empty()) from_summary = summary;
    if (!design.empty()) {
      try {
        dv = parse_design(design);
      } catch (const std::exception& e) {
        std::cerr << "config error: --design: " << e.what() << "\n";
        return hpso::cli::kConfigError;
      }
    }
    return hpso::cli::export_netlist_command(config, from_summary, dv, std::cout, std::cerr);
  }
  return hpso::cli::bench_command(config, std::cout, std::cerr);
}

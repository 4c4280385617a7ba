#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hpso/pso.hpp"

namespace hpso::bench {

/// Synthetic constrained problem with a known optimum.
class BenchProblem : public Problem {
 public:
  virtual const std::string& name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual double known_optimum() const = 0;
  virtual std::string feasibility() const = 0;
};

/// f(x) = sum x_d^2 on [-1, 1]^D, feasible where sum x_d^2 <= fraction * D.
class ConstrainedSphere final : public BenchProblem {
 public:
  ConstrainedSphere(std::size_t dimension, double feasible_fraction);

  double fitness(std::span<const double> x) const override;
  Survival survive(std::span<const double> x) const override;
  Bounds bounds() const override { return bounds_; }

  const std::string& name() const override { return name_; }
  std::size_t dimension() const override { return bounds_.dimension(); }
  double known_optimum() const override { return 0.0; }
  std::string feasibility() const override;
  double feasible_fraction() const { return fraction_; }

 private:
  std::string name_;
  double fraction_;
  Bounds bounds_;
};

ConstrainedSphere constrained_sphere(std::size_t dimension, double feasible_fraction);

struct AlgorithmStats {
  double best = 0.0;
  double worst = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  double mean_regenerations = 0.0;
  double mean_retries = 0.0;
  std::size_t runs = 0;  // successful runs
  std::vector<std::uint64_t> failed_seeds;
};

struct ComparisonStats {
  AlgorithmStats hybrid;
  AlgorithmStats standard;
};

/// Final-fitness statistics of one algorithm over a set of runs.
AlgorithmStats summarize(std::span<const RunResult> runs);

/// Runs optimize and optimize_standard for every seed (config.rng_seed is
/// replaced) and aggregates. Throws std::invalid_argument for fewer than two
/// seeds.
ComparisonStats compare(const Problem& problem, const PsoConfig& config,
                        std::span<const std::uint64_t> seeds);

/// CSV with one row per algorithm.
std::string to_csv(const ComparisonStats& stats);

}  // namespace hpso::bench

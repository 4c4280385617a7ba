#include "hpso/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpso/format.hpp"

namespace hpso::bench {

ConstrainedSphere::ConstrainedSphere(std::size_t dimension, double feasible_fraction)
    : fraction_(feasible_fraction) {
  if (dimension < 1) throw std::invalid_argument("constrained_sphere: dimension must be >= 1");
  if (!(feasible_fraction > 0.0 && feasible_fraction <= 1.0)) {
    throw std::invalid_argument("constrained_sphere: feasible_fraction must lie in (0, 1]");
  }
  name_ = "constrained_sphere(" + std::to_string(dimension) + "," + text::shortest(feasible_fraction) + ")";
  bounds_.lower.assign(dimension, -1.0);
  bounds_.upper.assign(dimension, 1.0);
}

double ConstrainedSphere::fitness(std::span<const double> x) const {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

Survival ConstrainedSphere::survive(std::span<const double> x) const {
  if (!bounds_.contains(x)) return {false, "out of bounds"};
  if (fitness(x) <= fraction_ * static_cast<double>(dimension())) return {true, {}};
  return {false, "outside feasible ball"};
}

std::string ConstrainedSphere::feasibility() const {
  return "sum x_d^2 <= " + text::shortest(fraction_) + " * D within [-1, 1]^D";
}

ConstrainedSphere constrained_sphere(std::size_t dimension, double feasible_fraction) {
  return ConstrainedSphere(dimension, feasible_fraction);
}

AlgorithmStats summarize(std::span<const RunResult> runs) {
  AlgorithmStats s;
  s.runs = runs.size();
  if (runs.empty()) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    s.best = s.worst = s.mean = s.stddev = s.mean_regenerations = s.mean_retries = nan;
    return s;
  }
  const double n = static_cast<double>(runs.size());
  s.best = std::numeric_limits<double>::infinity();
  s.worst = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto& r : runs) {
    s.best = std::min(s.best, r.gbest_fitness);
    s.worst = std::max(s.worst, r.gbest_fitness);
    sum += r.gbest_fitness;
    s.mean_regenerations += static_cast<double>(r.regeneration_count);
    s.mean_retries += static_cast<double>(r.retry_count);
  }
  s.mean = sum / n;
  s.mean_regenerations /= n;
  s.mean_retries /= n;
  // Rounding can push the mean a hair outside [best, worst] when all runs agree.
  s.mean = std::clamp(s.mean, s.best, s.worst);
  double ss = 0.0;
  for (const auto& r : runs) ss += (r.gbest_fitness - s.mean) * (r.gbest_fitness - s.mean);
  s.stddev = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return s;
}

ComparisonStats compare(const Problem& problem, const PsoConfig& config,
                        std::span<const std::uint64_t> seeds) {
  if (seeds.size() < 2) throw std::invalid_argument("compare: need at least two seeds");
  std::vector<std::uint64_t> sorted(seeds.begin(), seeds.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<RunResult> hybrid;
  std::vector<RunResult> standard;
  std::vector<std::uint64_t> hybrid_failed;
  std::vector<std::uint64_t> standard_failed;
  for (auto seed : sorted) {
    PsoConfig c = config;
    c.rng_seed = seed;
    try {
      hybrid.push_back(optimize(problem, c));
    } catch (const GenerationExhausted&) {
      hybrid_failed.push_back(seed);
    }
    try {
      standard.push_back(optimize_standard(problem, c));
    } catch (const GenerationExhausted&) {
      standard_failed.push_back(seed);
    }
  }
  ComparisonStats stats{summarize(hybrid), summarize(standard)};
  stats.hybrid.failed_seeds = std::move(hybrid_failed);
  stats.standard.failed_seeds = std::move(standard_failed);
  return stats;
}

std::string to_csv(const ComparisonStats& stats) {
  std::string out =
      "algorithm,best,worst,mean,std,mean_regenerations,mean_retries,runs,failed_runs\n";
  auto row = [&](const char* name, const AlgorithmStats& s) {
    out += name;
    for (double v : {s.best, s.worst, s.mean, s.stddev, s.mean_regenerations, s.mean_retries}) {
      out += ",";
      out += text::shortest(v);
    }
    out += "," + std::to_string(s.runs) + "," + std::to_string(s.failed_seeds.size()) + "\n";
  };
  row("hybrid", stats.hybrid);
  row("standard", stats.standard);
  return out;
}

}  // namespace hpso::bench

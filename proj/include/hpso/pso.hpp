#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hpso/rng.hpp"

namespace hpso {

/// Per-dimension box of the search space.
struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;

  std::size_t dimension() const { return lower.size(); }
  bool contains(std::span<const double> x) const;
  double range(std::size_t d) const { return upper[d] - lower[d]; }

  /// Throws std::invalid_argument unless D >= 1 and lower[d] < upper[d].
  void validate() const;
};

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> pbest_position;
  double pbest_fitness = 0.0;

  bool operator==(const Particle&) const = default;
};

struct Survival {
  bool pass = false;
  std::string diagnostic;
};

/// Minimization problem seen by the engine.
///
/// Implementations must be deterministic and safe for concurrent calls
/// through a const reference; the engine may evaluate several particles of
/// one iteration on different threads.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual double fitness(std::span<const double> x) const = 0;
  /// Feasibility test. A position outside bounds() must fail.
  virtual Survival survive(std::span<const double> x) const = 0;
  virtual Bounds bounds() const = 0;
};

enum class RandomDraws { per_dimension, scalar };

/// What a retry after a failed survivability test starts from.
enum class RetryStart {
  chained,  // the last (failed) attempt's position and velocity
  restart,  // the particle's state before the first attempt
};

struct PsoConfig {
  std::size_t swarm_size = 20;
  std::size_t max_iterations = 100;
  double w_min = 0.5;
  double w_max = 0.8;
  double c1 = 1.7;
  double c2 = 1.7;
  std::size_t max_velocity_retries = 10;
  std::size_t max_generation_attempts = 1000;
  std::uint64_t rng_seed = 0;

  /// Velocity components are clamped to +-velocity_clamp * (upper - lower).
  /// Zero disables clamping.
  double velocity_clamp = 0.5;
  RandomDraws draws = RandomDraws::per_dimension;
  RetryStart retry_start = RetryStart::chained;

  /// Worker threads used for per-particle updates. Results do not depend on it.
  std::size_t threads = 1;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RunResult {
  std::vector<double> gbest_position;
  double gbest_fitness = 0.0;
  /// gbest fitness after each iteration; size max_iterations for a full run.
  std::vector<double> fitness_history;
  std::vector<double> inertia_history;
  std::vector<std::size_t> regenerations_per_iteration;
  std::vector<std::size_t> retries_per_iteration;
  std::size_t regeneration_count = 0;
  std::size_t retry_count = 0;

  bool operator==(const RunResult&) const = default;
};

/// The generation function could not find a surviving position.
class GenerationExhausted : public std::runtime_error {
 public:
  GenerationExhausted(std::size_t attempts, std::string last_diagnostic);

  std::size_t attempts() const { return attempts_; }
  const std::string& last_diagnostic() const { return last_diagnostic_; }

  /// History of the run up to the failure, when raised from optimize().
  RunResult partial;

 private:
  std::size_t attempts_;
  std::string last_diagnostic_;
};

/// Linearly decreasing schedule: w_max at ite = 0, w_min at ite = max_iterations.
double inertia_weight(std::size_t ite, const PsoConfig& config);

/// w*v + c1*r1*(pbest - x) + c2*r2*(gbest - x), element-wise.
std::vector<double> update_velocity(const Particle& p, std::span<const double> gbest, double w,
                                    double c1, double c2, std::span<const double> r1,
                                    std::span<const double> r2);

std::vector<double> update_position(std::span<const double> position,
                                    std::span<const double> velocity);

/// Rejection-samples uniform positions inside problem.bounds() until one survives.
Particle generate_particle(const Problem& problem, const PsoConfig& config, Stream& rng);

struct StepOutcome {
  Particle particle;
  std::size_t retries_used = 0;
  bool regenerated = false;
};

/// One hybrid update of a surviving particle: velocity/position update,
/// re-updated up to max_velocity_retries times while the survivability test
/// fails, then replaced by a freshly generated particle.
StepOutcome hybrid_step(const Particle& p, std::span<const double> gbest, double w,
                        const Problem& problem, const PsoConfig& config, Stream& rng);

/// Standard form: a single update; a failing particle is regenerated at once.
StepOutcome standard_step(const Particle& p, std::span<const double> gbest, double w,
                          const Problem& problem, const PsoConfig& config, Stream& rng);

RunResult optimize(const Problem& problem, const PsoConfig& config);
RunResult optimize_standard(const Problem& problem, const PsoConfig& config);

}  // namespace hpso

#include "hpso/pso.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

namespace hpso {

namespace {

void require_same_dimension(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::logic_error(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                           " vs " + std::to_string(b) + ")");
  }
}

struct Draws {
  std::vector<double> r1;
  std::vector<double> r2;
};

Draws draw(Stream& rng, std::size_t dim, RandomDraws mode) {
  Draws d{std::vector<double>(dim), std::vector<double>(dim)};
  if (mode == RandomDraws::scalar) {
    std::fill(d.r1.begin(), d.r1.end(), rng.uniform01());
    std::fill(d.r2.begin(), d.r2.end(), rng.uniform01());
  } else {
    for (auto& r : d.r1) r = rng.uniform01();
    for (auto& r : d.r2) r = rng.uniform01();
  }
  return d;
}

void clamp_velocity(std::vector<double>& v, const Bounds& bounds, double fraction) {
  if (fraction <= 0.0) return;
  for (std::size_t d = 0; d < v.size(); ++d) {
    const double vmax = fraction * bounds.range(d);
    v[d] = std::clamp(v[d], -vmax, vmax);
  }
}

// Moves `state` by one application of the update equations.
void advance(Particle& state, std::span<const double> gbest, double w, const PsoConfig& config,
             const Bounds& bounds, Stream& rng) {
  const auto d = draw(rng, state.position.size(), config.draws);
  state.velocity = update_velocity(state, gbest, w, config.c1, config.c2, d.r1, d.r2);
  clamp_velocity(state.velocity, bounds, config.velocity_clamp);
  state.position = update_position(state.position, state.velocity);
}

StepOutcome accept(Particle state, const Problem& problem, std::size_t retries) {
  const double f = problem.fitness(state.position);
  if (f < state.pbest_fitness) {
    state.pbest_position = state.position;
    state.pbest_fitness = f;
  }
  return {std::move(state), retries, false};
}

StepOutcome regenerate(const Problem& problem, const PsoConfig& config, Stream& rng,
                       std::size_t retries) {
  return {generate_particle(problem, config, rng), retries, true};
}

// Runs fn(i) for i in [0, n). Exceptions are rethrown for the lowest failing
// index so parallel and serial runs fail identically.
void for_each_index(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += workers) guarded(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

using StepFn = StepOutcome (*)(const Particle&, std::span<const double>, double, const Problem&,
                               const PsoConfig&, Stream&);

RunResult run(const Problem& problem, const PsoConfig& config, StepFn step) {
  config.validate();
  problem.bounds().validate();

  const std::size_t n = config.swarm_size;
  std::vector<Particle> swarm(n);
  RunResult result;

  try {
    for_each_index(n, config.threads, [&](std::size_t i) {
      Stream rng(config.rng_seed, i, 0);
      swarm[i] = generate_particle(problem, config, rng);
    });
  } catch (GenerationExhausted& e) {
    e.partial = result;
    throw;
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (swarm[i].pbest_fitness < swarm[best].pbest_fitness) best = i;
  }
  result.gbest_position = swarm[best].pbest_position;
  result.gbest_fitness = swarm[best].pbest_fitness;

  std::vector<StepOutcome> outcomes(n);
  for (std::size_t ite = 0; ite < config.max_iterations; ++ite) {
    const double w = inertia_weight(ite, config);
    const std::vector<double> gbest = result.gbest_position;
    try {
      for_each_index(n, config.threads, [&](std::size_t i) {
        Stream rng(config.rng_seed, i, ite + 1);
        outcomes[i] = step(swarm[i], gbest, w, problem, config, rng);
      });
    } catch (GenerationExhausted& e) {
      e.partial = result;
      throw;
    }

    std::size_t regenerations = 0;
    std::size_t retries = 0;
    for (std::size_t i = 0; i < n; ++i) {
      swarm[i] = std::move(outcomes[i].particle);
      regenerations += outcomes[i].regenerated ? 1 : 0;
      retries += outcomes[i].retries_used;
      if (swarm[i].pbest_fitness < result.gbest_fitness) {
        result.gbest_fitness = swarm[i].pbest_fitness;
        result.gbest_position = swarm[i].pbest_position;
      }
    }
    result.regeneration_count += regenerations;
    result.retry_count += retries;
    result.fitness_history.push_back(result.gbest_fitness);
    result.inertia_history.push_back(w);
    result.regenerations_per_iteration.push_back(regenerations);
    result.retries_per_iteration.push_back(retries);
  }
  return result;
}

}  // namespace

bool Bounds::contains(std::span<const double> x) const {
  if (x.size() != dimension()) return false;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (!(x[d] >= lower[d] && x[d] <= upper[d])) return false;
  }
  return true;
}

void Bounds::validate() const {
  if (lower.empty()) throw std::invalid_argument("bounds: dimension must be at least 1");
  if (lower.size() != upper.size()) throw std::invalid_argument("bounds: lower/upper size mismatch");
  for (std::size_t d = 0; d < lower.size(); ++d) {
    if (!(lower[d] < upper[d])) {
      throw std::invalid_argument("bounds: empty interval in dimension " + std::to_string(d));
    }
  }
}

void PsoConfig::validate() const {
  if (swarm_size < 2) throw ConfigError("swarm_size", "must be at least 2");
  if (max_iterations < 1) throw ConfigError("max_iterations", "must be positive");
  if (!(w_min > 0.0)) throw ConfigError("w_min", "must be positive");
  if (!(w_min <= w_max)) throw ConfigError("w_max", "must not be below w_min");
  if (!(c1 >= 0.0)) throw ConfigError("c1", "must be non-negative");
  if (!(c2 >= 0.0)) throw ConfigError("c2", "must be non-negative");
  if (max_velocity_retries < 1) throw ConfigError("max_velocity_retries", "must be positive");
  if (max_generation_attempts < 1) throw ConfigError("max_generation_attempts", "must be positive");
  if (!(velocity_clamp >= 0.0)) throw ConfigError("velocity_clamp", "must be non-negative");
  if (threads < 1) throw ConfigError("threads", "must be positive");
}

GenerationExhausted::GenerationExhausted(std::size_t attempts, std::string last_diagnostic)
    : std::runtime_error("generation exhausted after " + std::to_string(attempts) + " attempts" +
                         (last_diagnostic.empty() ? "" : " (last: " + last_diagnostic + ")")),
      attempts_(attempts),
      last_diagnostic_(std::move(last_diagnostic)) {}

double inertia_weight(std::size_t ite, const PsoConfig& config) {
  const double t = static_cast<double>(ite) / static_cast<double>(config.max_iterations);
  // std::lerp is exact at both ends, so w(0) == w_max and w(maxite) == w_min.
  return std::clamp(std::lerp(config.w_max, config.w_min, t), config.w_min, config.w_max);
}

std::vector<double> update_velocity(const Particle& p, std::span<const double> gbest, double w,
                                    double c1, double c2, std::span<const double> r1,
                                    std::span<const double> r2) {
  const std::size_t dim = p.position.size();
  require_same_dimension(dim, p.velocity.size(), "update_velocity(velocity)");
  require_same_dimension(dim, p.pbest_position.size(), "update_velocity(pbest)");
  require_same_dimension(dim, gbest.size(), "update_velocity(gbest)");
  require_same_dimension(dim, r1.size(), "update_velocity(r1)");
  require_same_dimension(dim, r2.size(), "update_velocity(r2)");

  std::vector<double> v(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    v[d] = w * p.velocity[d] + c1 * r1[d] * (p.pbest_position[d] - p.position[d]) +
           c2 * r2[d] * (gbest[d] - p.position[d]);
  }
  return v;
}

std::vector<double> update_position(std::span<const double> position,
                                    std::span<const double> velocity) {
  require_same_dimension(position.size(), velocity.size(), "update_position");
  std::vector<double> x(position.size());
  for (std::size_t d = 0; d < x.size(); ++d) x[d] = position[d] + velocity[d];
  return x;
}

Particle generate_particle(const Problem& problem, const PsoConfig& config, Stream& rng) {
  const Bounds bounds = problem.bounds();
  const std::size_t dim = bounds.dimension();
  std::vector<double> x(dim);
  std::string diagnostic;
  for (std::size_t attempt = 0; attempt < config.max_generation_attempts; ++attempt) {
    for (std::size_t d = 0; d < dim; ++d) x[d] = rng.uniform(bounds.lower[d], bounds.upper[d]);
    auto verdict = problem.survive(x);
    if (verdict.pass) {
      const double f = problem.fitness(x);
      return Particle{x, std::vector<double>(dim, 0.0), x, f};
    }
    diagnostic = std::move(verdict.diagnostic);
  }
  throw GenerationExhausted(config.max_generation_attempts, std::move(diagnostic));
}

StepOutcome hybrid_step(const Particle& p, std::span<const double> gbest, double w,
                        const Problem& problem, const PsoConfig& config, Stream& rng) {
  const Bounds bounds = problem.bounds();
  Particle state = p;
  for (std::size_t attempt = 0; attempt <= config.max_velocity_retries; ++attempt) {
    if (attempt > 0 && config.retry_start == RetryStart::restart) {
      state.position = p.position;
      state.velocity = p.velocity;
    }
    advance(state, gbest, w, config, bounds, rng);
    if (problem.survive(state.position).pass) return accept(std::move(state), problem, attempt);
  }
  return regenerate(problem, config, rng, config.max_velocity_retries);
}

StepOutcome standard_step(const Particle& p, std::span<const double> gbest, double w,
                          const Problem& problem, const PsoConfig& config, Stream& rng) {
  const Bounds bounds = problem.bounds();
  Particle state = p;
  advance(state, gbest, w, config, bounds, rng);
  if (problem.survive(state.position).pass) return accept(std::move(state), problem, 0);
  return regenerate(problem, config, rng, 0);
}

RunResult optimize(const Problem& problem, const PsoConfig& config) {
  return run(problem, config, &hybrid_step);
}

RunResult optimize_standard(const Problem& problem, const PsoConfig& config) {
  return run(problem, config, &standard_step);
}

}  // namespace hpso

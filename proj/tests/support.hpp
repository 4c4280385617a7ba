#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "hpso/pso.hpp"

namespace testing {

inline bool rel_close(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

// Six significant figures.
inline bool sig6(double a, double b) { return rel_close(a, b, 5e-7); }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Fresh directory under the system temp dir, removed on scope exit.
class ScratchDir {
 public:
  ScratchDir() {
    static std::mt19937_64 gen(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("hpso-test-" + std::to_string(gen()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Box [lo, hi]^D with survive() = inside box and x_0 <= cut.
class HalfBox final : public hpso::Problem {
 public:
  HalfBox(std::size_t dim, double cut) : dim_(dim), cut_(cut) {}
  double fitness(std::span<const double> x) const override {
    double s = 0.0;
    for (double v : x) s += (v - 0.3) * (v - 0.3);
    return s;
  }
  hpso::Survival survive(std::span<const double> x) const override {
    if (!bounds().contains(x)) return {false, "out of bounds"};
    if (x[0] > cut_) return {false, "x0 above cut"};
    return {true, {}};
  }
  hpso::Bounds bounds() const override {
    return {std::vector<double>(dim_, 0.0), std::vector<double>(dim_, 1.0)};
  }

 private:
  std::size_t dim_;
  double cut_;
};

// Wraps a problem and fails the test run if fitness() is ever asked for a
// position that does not survive: the engine only scores accepted particles.
class FeasibilityAudit final : public hpso::Problem {
 public:
  explicit FeasibilityAudit(const hpso::Problem& inner) : inner_(inner) {}
  double fitness(std::span<const double> x) const override {
    if (!inner_.survive(x).pass) violations_.fetch_add(1);
    return inner_.fitness(x);
  }
  hpso::Survival survive(std::span<const double> x) const override { return inner_.survive(x); }
  hpso::Bounds bounds() const override { return inner_.bounds(); }
  std::size_t violations() const { return violations_.load(); }

 private:
  const hpso::Problem& inner_;
  mutable std::atomic<std::size_t> violations_{0};
};

}  // namespace testing

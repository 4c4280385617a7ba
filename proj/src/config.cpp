#include "hpso/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace hpso {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& field, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) {
    throw ConfigError(field, "expected a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& field, const std::string& raw) {
  const std::string s = trim(raw);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError(field, "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string& field, const std::string& value)>;

template <class Group, class Field>
Setter number(Group RunConfig::*group, Field Group::*member) {
  return [group, member](RunConfig& c, const std::string& field, const std::string& value) {
    if constexpr (std::is_floating_point_v<Field>) {
      c.*group.*member = to_double(field, value);
    } else {
      c.*group.*member = static_cast<Field>(to_unsigned(field, value));
    }
  };
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(trim(value));
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

// Keys per section. Anything else is reported as unknown.
std::map<std::string, std::map<std::string, Setter>> schema(const std::filesystem::path& base) {
  using opamp::SpecTable;
  using opamp::TechParams;
  std::map<std::string, std::map<std::string, Setter>> s;
  s["run"] = {
      {"problem", [](RunConfig& c, const std::string&, const std::string& v) { c.problem = parse_problem(trim(v)); }},
      {"output_dir", [base](RunConfig& c, const std::string&, const std::string& v) { c.output_dir = resolve(base, v); }},
      {"seeds", [](RunConfig& c, const std::string& f, const std::string& v) { c.seeds = parse_seed_list(v, f); }},
  };
  s["pso"] = {
      {"swarm_size", number(&RunConfig::pso, &PsoConfig::swarm_size)},
      {"max_iterations", number(&RunConfig::pso, &PsoConfig::max_iterations)},
      {"w_min", number(&RunConfig::pso, &PsoConfig::w_min)},
      {"w_max", number(&RunConfig::pso, &PsoConfig::w_max)},
      {"c1", number(&RunConfig::pso, &PsoConfig::c1)},
      {"c2", number(&RunConfig::pso, &PsoConfig::c2)},
      {"max_velocity_retries", number(&RunConfig::pso, &PsoConfig::max_velocity_retries)},
      {"max_generation_attempts", number(&RunConfig::pso, &PsoConfig::max_generation_attempts)},
      {"velocity_clamp", number(&RunConfig::pso, &PsoConfig::velocity_clamp)},
      {"threads", number(&RunConfig::pso, &PsoConfig::threads)},
      {"draws",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         const auto t = trim(v);
         if (t == "per_dimension") c.pso.draws = RandomDraws::per_dimension;
         else if (t == "scalar") c.pso.draws = RandomDraws::scalar;
         else throw ConfigError(f, "expected per_dimension or scalar, got '" + t + "'");
       }},
      {"retry_start",
       [](RunConfig& c, const std::string& f, const std::string& v) {
         const auto t = trim(v);
         if (t == "chained") c.pso.retry_start = RetryStart::chained;
         else if (t == "restart") c.pso.retry_start = RetryStart::restart;
         else throw ConfigError(f, "expected chained or restart, got '" + t + "'");
       }},
  };
  s["specs"] = {
      {"av_min", number(&RunConfig::specs, &SpecTable::av_min)},
      {"p_max", number(&RunConfig::specs, &SpecTable::p_max)},
      {"sr_min", number(&RunConfig::specs, &SpecTable::sr_min)},
      {"f3db_min", number(&RunConfig::specs, &SpecTable::f3db_min)},
      {"ugb_min", number(&RunConfig::specs, &SpecTable::ugb_min)},
      {"pm_min", number(&RunConfig::specs, &SpecTable::pm_min)},
      {"vcm_low", number(&RunConfig::specs, &SpecTable::vcm_low)},
      {"vcm_high", number(&RunConfig::specs, &SpecTable::vcm_high)},
      {"noise_max", number(&RunConfig::specs, &SpecTable::noise_max)},
      {"noise_freq", number(&RunConfig::specs, &SpecTable::noise_freq)},
      {"area_max", number(&RunConfig::specs, &SpecTable::area_max)},
      {"wl_ratio_min", number(&RunConfig::specs, &SpecTable::wl_ratio_min)},
      {"wl_ratio_max", number(&RunConfig::specs, &SpecTable::wl_ratio_max)},
      {"c_load", number(&RunConfig::specs, &SpecTable::c_load)},
      {"ibias_floor", number(&RunConfig::specs, &SpecTable::ibias_floor)},
  };
  s["tech"] = {
      {"vdd", number(&RunConfig::tech, &TechParams::vdd)},
      {"channel_length", number(&RunConfig::tech, &TechParams::channel_length)},
      {"mu_n_cox", number(&RunConfig::tech, &TechParams::mu_n_cox)},
      {"mu_p_cox", number(&RunConfig::tech, &TechParams::mu_p_cox)},
      {"vth_n", number(&RunConfig::tech, &TechParams::vth_n)},
      {"vth_p", number(&RunConfig::tech, &TechParams::vth_p)},
      {"lambda_n", number(&RunConfig::tech, &TechParams::lambda_n)},
      {"lambda_p", number(&RunConfig::tech, &TechParams::lambda_p)},
      {"gamma_noise", number(&RunConfig::tech, &TechParams::gamma_noise)},
      {"cc_ratio", number(&RunConfig::tech, &TechParams::cc_ratio)},
      {"temperature", number(&RunConfig::tech, &TechParams::temperature)},
  };
  s["spice"] = {
      {"simulator_path",
       [base](RunConfig& c, const std::string&, const std::string& v) {
         const auto t = trim(v);
         // A bare name is looked up on PATH at run time.
         c.spice.simulator_path = t.find('/') == std::string::npos ? std::filesystem::path(t) : resolve(base, t);
       }},
      {"model_include_path",
       [base](RunConfig& c, const std::string&, const std::string& v) {
         c.spice.model_include_path = resolve(base, v);
       }},
      {"timeout_seconds", number(&RunConfig::spice, &spice::SpiceConfig::timeout_seconds)},
  };
  s["bench"] = {
      {"dimension", [](RunConfig& c, const std::string& f, const std::string& v) { c.bench_dimension = to_unsigned(f, v); }},
      {"feasible_fraction", [](RunConfig& c, const std::string& f, const std::string& v) { c.bench_feasible_fraction = to_double(f, v); }},
  };
  return s;
}

constexpr const char* kDesignKeys[] = {"w12", "w34", "w58", "w6", "w7", "ibias"};

opamp::DesignVector design_from(const pt::ptree& section, const std::string& prefix) {
  std::array<double, opamp::kDimension> x{};
  std::size_t k = 0;
  for (const char* key : kDesignKeys) {
    const std::string field = prefix + "." + key;
    auto v = section.get_optional<std::string>(key);
    if (!v) throw ConfigError(field, "missing");
    x[k++] = to_double(field, *v);
  }
  for (const auto& [key, _] : section) {
    if (std::find(std::begin(kDesignKeys), std::end(kDesignKeys), key) == std::end(kDesignKeys)) {
      throw ConfigError(prefix + "." + key, "unknown key");
    }
  }
  auto dv = opamp::DesignVector::from_position(x);
  try {
    dv.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(prefix, e.what());
  }
  return dv;
}

pt::ptree read_ini(std::istream& in, const std::string& origin) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("file", origin + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  return tree;
}

// SpecError messages start with the field name.
ConfigError wrap(const std::string& section, const std::exception& e) {
  std::string msg = e.what();
  auto space = msg.find(' ');
  std::string key = msg.substr(0, space);
  return ConfigError(section + "." + key, space == std::string::npos ? msg : msg.substr(space + 1));
}

}  // namespace

std::string_view problem_name(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::opamp_analytic: return "opamp-analytic";
    case ProblemKind::opamp_spice: return "opamp-spice";
    case ProblemKind::bench: return "bench";
  }
  return "?";
}

ProblemKind parse_problem(std::string_view name) {
  for (auto k : {ProblemKind::opamp_analytic, ProblemKind::opamp_spice, ProblemKind::bench}) {
    if (problem_name(k) == name) return k;
  }
  throw ConfigError("problem", "unknown problem '" + std::string(name) +
                                   "' (expected one of: opamp-analytic, opamp-spice, bench)");
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text, const std::string& field) {
  std::vector<std::uint64_t> out;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_unsigned(field, item));
  if (out.empty()) throw ConfigError(field, "empty seed list");
  return out;
}

void RunConfig::validate() const {
  try {
    pso.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("pso." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
  if (seeds.empty()) throw ConfigError("run.seeds", "empty seed list");
  if (problem == ProblemKind::bench) {
    if (bench_dimension < 1) throw ConfigError("bench.dimension", "must be at least 1");
    if (!(bench_feasible_fraction > 0.0 && bench_feasible_fraction <= 1.0)) {
      throw ConfigError("bench.feasible_fraction", "must lie in (0, 1]");
    }
    return;
  }
  try {
    specs.validate();
  } catch (const opamp::SpecError& e) {
    throw wrap("specs", e);
  }
  try {
    tech.validate();
  } catch (const opamp::SpecError& e) {
    throw wrap("tech", e);
  }
  try {
    (void)opamp::derive_bounds(specs, tech);
  } catch (const opamp::SpecError& e) {
    throw ConfigError("specs", e.what());
  }
  if (problem == ProblemKind::opamp_spice) {
    if (spice.model_include_path.empty()) {
      throw ConfigError("spice.model_include_path", "required for problem opamp-spice");
    }
    if (!std::filesystem::exists(spice.model_include_path)) {
      throw ConfigError("spice.model_include_path",
                        "file not found: " + spice.model_include_path.string());
    }
    if (!(spice.timeout_seconds > 0.0)) {
      throw ConfigError("spice.timeout_seconds", "must be positive");
    }
  }
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  std::istringstream in(text);
  const pt::ptree tree = read_ini(in, "config");
  const auto keys = schema(base_dir);

  RunConfig c;
  // The default output directory sits next to the config, like explicit relative ones.
  c.output_dir = resolve(base_dir, c.output_dir.string());
  bool spice_path_set = false;
  bool retries_set = false;
  bool attempts_set = false;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section, "key outside any section");
    }
    if (section == "design") {
      c.design = design_from(body, "design");
      continue;
    }
    auto sit = keys.find(section);
    if (sit == keys.end()) throw ConfigError(section, "unknown section");
    for (const auto& [key, value] : body) {
      const std::string field = section + "." + key;
      auto kit = sit->second.find(key);
      if (kit == sit->second.end()) throw ConfigError(field, "unknown key");
      kit->second(c, field, value.data());
      spice_path_set |= field == "spice.simulator_path";
      retries_set |= field == "pso.max_velocity_retries";
      attempts_set |= field == "pso.max_generation_attempts";
    }
  }
  if (!spice_path_set) {
    if (const char* env = std::getenv(kSimulatorEnv); env != nullptr && *env != '\0') {
      c.spice.simulator_path = env;
    }
  }
  if (c.problem != ProblemKind::bench) {
    if (!retries_set) c.pso.max_velocity_retries = kOpampVelocityRetries;
    if (!attempts_set) c.pso.max_generation_attempts = kOpampGenerationAttempts;
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

opamp::DesignVector read_design(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("design", "cannot open " + path.string());
  const pt::ptree tree = read_ini(in, path.string());
  auto section = tree.get_child_optional("design");
  if (!section) throw ConfigError("design", "no [design] section in " + path.string());
  return design_from(*section, "design");
}

}  // namespace hpso

#include "hpso/spice.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "hpso/format.hpp"

namespace hpso::spice {
namespace {

using opamp::DesignVector;
using opamp::EvalReport;
using opamp::SpecTable;
using opamp::TechParams;

constexpr std::array<const char*, 6> kDesignPlaceholders = {"w12", "w34", "w58", "w6", "w7", "ibias"};
constexpr std::array<const char*, 8> kDeviceNames = {"m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8"};

// Batch deck for ngspice. Every measured quantity is printed as a scalar so
// the output carries one "name = value" line per entry.
std::string build_opamp_template() {
  std::string t = R"(* two-stage Miller-compensated op-amp
.include {{model_include}}
VDD vdd 0 DC {{vdd}}
VINP inp 0 DC {{vcm_mid}} AC 0.5
VINN inn 0 DC {{vcm_mid}} AC 0.5 180
IBIAS vdd nb DC {{ibias}}
M1 d1 inn tail 0 nch W={{w12}} L={{l}}
M2 n1 inp tail 0 nch W={{w12}} L={{l}}
M3 d1 d1 vdd vdd pch W={{w34}} L={{l}}
M4 n1 d1 vdd vdd pch W={{w34}} L={{l}}
M5 tail nb 0 0 nch W={{w58}} L={{l}}
M6 out n1 vdd vdd pch W={{w6}} L={{l}}
M7 out nb 0 0 nch W={{w7}} L={{l}}
M8 nb nb 0 0 nch W={{w58}} L={{l}}
CC n1 out {{cc}}
CL out 0 {{c_load}}
.op
.ac dec 100 1 100G
.noise v(out) VINP dec 20 1k 10G
.control
set noaskquit
set units=degrees
)";
  auto saturation_block = [&](const char* tag, const char* vcm) {
    t += "alter VINP dc = {{" + std::string(vcm) + "}}\n";
    t += "alter VINN dc = {{" + std::string(vcm) + "}}\n";
    t += "op\n";
    for (const char* m : kDeviceNames) {
      for (const char* q : {"vgs", "vds", "vth"}) {
        std::string name = std::string(tag) + "_" + m + "_" + q;
        t += "let " + name + " = @" + m + "[" + q + "]\n";
        t += "print " + name + "\n";
      }
    }
  };
  saturation_block("lo", "vcm_low");
  saturation_block("hi", "vcm_high");
  t += R"(alter VINP dc = {{vcm_mid}}
alter VINN dc = {{vcm_mid}}
op
let i5 = @m5[id]
let i6 = @m6[id]
let power = -i(VDD) * {{vdd}}
let cc = {{cc}}
let c_load = {{c_load}}
let area = {{area}}
print i5
print i6
print power
print cc
print c_load
print area
ac dec 100 1 100G
meas ac av_db find vdb(out) at=1
let f3_target = av_db - 3
meas ac f3db when vdb(out)=$&f3_target fall=1
meas ac ugb when vdb(out)=0 fall=1
meas ac phase_at_ugb find vp(out) at=$&ugb
let phase_margin = 180 + phase_at_ugb
print phase_margin
noise v(out) VINP dec 20 1k 10G
setplot noise1
meas noise noise_psd find inoise_spectrum at={{noise_freq}}
quit
.endc
.end
)";
  return t;
}

// Shortest decimal mantissa that parses back to exactly `value` when
// followed by the exponent implied by `scale`.
std::string scaled_mantissa(double value, double scale, const char* exponent) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value / scale);
    std::string candidate = std::string(buf) + exponent;
    if (std::strtod(candidate.c_str(), nullptr) == value) return buf;
  }
  return {};
}

std::string render_value(double value) { return text::shortest(value); }

struct TempDir {
  std::filesystem::path path;
  bool keep = false;
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "hpso-spice-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw SimulationError(SimulationError::Kind::failed,
                            std::string("simulation failed: cannot create temporary directory: ") +
                                std::strerror(errno));
    }
    path = pattern;
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    if (keep) return;
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double required(const std::map<std::string, double>& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) throw ParseError(name);
  return it->second;
}

}  // namespace

const std::vector<std::string>& known_placeholders() {
  static const std::vector<std::string> names = {
      "w12", "w34",    "w58",      "w6",      "w7",         "ibias", "l",
      "vdd", "cc",     "c_load",   "vcm_low", "vcm_high",   "vcm_mid",
      "noise_freq",    "area",     "model_include"};
  return names;
}

NetlistTemplate NetlistTemplate::opamp(std::filesystem::path model_include_path) {
  return {build_opamp_template(), std::move(model_include_path)};
}

std::vector<std::string> NetlistTemplate::placeholders() const {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = template_text.find("{{", pos)) != std::string::npos) {
    auto end = template_text.find("}}", pos + 2);
    if (end == std::string::npos) {
      throw TemplateError(template_text.substr(pos), "template error: unterminated placeholder");
    }
    std::string name = template_text.substr(pos + 2, end - pos - 2);
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    pos = end + 2;
  }
  return out;
}

void NetlistTemplate::validate() const {
  const auto& known = known_placeholders();
  const auto used = placeholders();
  for (const auto& name : used) {
    if (std::find(known.begin(), known.end(), name) == known.end()) {
      throw TemplateError(name, "template error: unknown placeholder " + name);
    }
  }
  for (const char* name : kDesignPlaceholders) {
    if (std::find(used.begin(), used.end(), name) == used.end()) {
      throw TemplateError(name, std::string("template error: missing placeholder ") + name);
    }
  }
}

std::string format_scaled(double value, double scale, char suffix) {
  char exponent[8];
  std::snprintf(exponent, sizeof exponent, "e%d", static_cast<int>(std::lround(std::log10(scale))));
  std::string mantissa = std::isfinite(value) ? scaled_mantissa(value, scale, exponent) : std::string();
  if (mantissa.empty()) return text::shortest(value);
  return mantissa + suffix;
}

std::string emit_netlist(const DesignVector& dv, const TechParams& tech, const SpecTable& specs,
                         const NetlistTemplate& tmpl) {
  tmpl.validate();
  const double cc = tech.cc(specs.c_load);
  const std::map<std::string, std::string> values = {
      {"w12", format_scaled(dv.w12, 1e-9, 'n')},
      {"w34", format_scaled(dv.w34, 1e-9, 'n')},
      {"w58", format_scaled(dv.w58, 1e-9, 'n')},
      {"w6", format_scaled(dv.w6, 1e-9, 'n')},
      {"w7", format_scaled(dv.w7, 1e-9, 'n')},
      {"ibias", format_scaled(dv.ibias, 1e-6, 'u')},
      {"l", format_scaled(tech.channel_length, 1e-9, 'n')},
      {"vdd", render_value(tech.vdd)},
      {"cc", format_scaled(cc, 1e-15, 'f')},
      {"c_load", format_scaled(specs.c_load, 1e-15, 'f')},
      {"vcm_low", render_value(specs.vcm_low)},
      {"vcm_high", render_value(specs.vcm_high)},
      {"vcm_mid", render_value(0.5 * (specs.vcm_low + specs.vcm_high))},
      {"noise_freq", render_value(specs.noise_freq)},
      {"area", render_value(opamp::area_fitness(dv, tech))},
      {"model_include", tmpl.model_include_path.string()},
  };

  const std::string& src = tmpl.template_text;
  std::string out;
  out.reserve(src.size() + 256);
  std::size_t pos = 0;
  while (true) {
    auto open = src.find("{{", pos);
    if (open == std::string::npos) {
      out.append(src, pos, std::string::npos);
      break;
    }
    out.append(src, pos, open - pos);
    auto close = src.find("}}", open + 2);
    const std::string name = src.substr(open + 2, close - open - 2);
    out += values.at(name);
    pos = close + 2;
  }
  // LF only.
  std::erase(out, '\r');
  return out;
}

std::filesystem::path find_executable(const std::filesystem::path& simulator) {
  if (simulator.empty()) return {};
  auto runnable = [](const std::filesystem::path& p) {
    std::error_code ec;
    return std::filesystem::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
  };
  if (simulator.string().find('/') != std::string::npos) {
    return runnable(simulator) ? simulator : std::filesystem::path{};
  }
  const char* path_env = std::getenv("PATH");
  if (path_env == nullptr) return {};
  std::stringstream dirs(path_env);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) dir = ".";
    auto candidate = std::filesystem::path(dir) / simulator;
    if (runnable(candidate)) return candidate;
  }
  return {};
}

SimResult run_simulator(const std::string& netlist, const std::filesystem::path& simulator,
                        double timeout_seconds) {
  const auto exe = find_executable(simulator);
  if (exe.empty()) {
    throw SimulationError(SimulationError::Kind::unavailable,
                          "backend unavailable: " + simulator.string() + " not found");
  }
  if (!(timeout_seconds > 0.0)) {
    throw SimulationError(SimulationError::Kind::timeout, "simulation timeout");
  }

  TempDir dir;
  const auto deck = dir.path / "circuit.cir";
  const auto log = dir.path / "output.log";
  {
    std::ofstream out(deck, std::ios::binary);
    out << netlist;
    if (!out) {
      throw SimulationError(SimulationError::Kind::failed,
                            "simulation failed: cannot write " + deck.string());
    }
  }

  const std::string exe_str = exe.string();
  const pid_t pid = ::fork();
  if (pid < 0) {
    throw SimulationError(SimulationError::Kind::failed,
                          std::string("simulation failed: fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    // Child: only async-signal-safe calls from here on.
    if (::chdir(dir.path.c_str()) != 0) ::_exit(126);
    int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (fd < 0 || devnull < 0) ::_exit(126);
    ::dup2(devnull, STDIN_FILENO);
    ::dup2(fd, STDOUT_FILENO);
    ::dup2(fd, STDERR_FILENO);
    ::setpgid(0, 0);
    ::execl(exe_str.c_str(), exe_str.c_str(), "-b", "circuit.cir", static_cast<char*>(nullptr));
    ::_exit(127);
  }

  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(timeout_seconds);
  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) {
      throw SimulationError(SimulationError::Kind::failed,
                            std::string("simulation failed: waitpid: ") + std::strerror(errno));
    }
    if (clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw SimulationError(SimulationError::Kind::timeout, "simulation timeout", read_file(log));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }

  SimResult result;
  result.raw_stdout = read_file(log);
  result.exit_status = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  if (result.exit_status != 0) {
    dir.keep = true;
    throw SimulationError(SimulationError::Kind::failed,
                          "simulation failed: exit status " + std::to_string(result.exit_status) +
                              " (deck kept in " + dir.path.string() + ")",
                          result.raw_stdout);
  }
  result.measured = parse_measurements(result.raw_stdout);
  return result;
}

std::map<std::string, double> parse_measurements(std::string_view text) {
  std::map<std::string, double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;

    std::size_t i = 0;
    auto skip_ws = [&] {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    };
    skip_ws();
    const std::size_t name_begin = i;
    if (i >= line.size() || !(std::isalpha(static_cast<unsigned char>(line[i])) || line[i] == '_')) continue;
    while (i < line.size() && (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) ++i;
    const std::string name(line.substr(name_begin, i - name_begin));
    skip_ws();
    if (i >= line.size() || line[i] != '=') continue;
    ++i;
    skip_ws();
    double value = 0.0;
    const char* first = line.data() + i;
    const char* last = line.data() + line.size();
    if (first < last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) continue;
    out.emplace(name, value);
  }
  return out;
}

const std::vector<std::string>& required_measurements() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = {"av_db", "f3db",  "ugb", "phase_margin", "noise_psd",
                                  "power", "i5",    "i6",  "cc",           "c_load", "area"};
    for (const char* tag : {"lo", "hi"}) {
      for (const char* m : kDeviceNames) {
        for (const char* q : {"vgs", "vds", "vth"}) {
          n.push_back(std::string(tag) + "_" + m + "_" + q);
        }
      }
    }
    return n;
  }();
  return names;
}

EvalReport parse_results(const SimResult& raw, const SpecTable& specs) {
  const auto& m = raw.measured;
  EvalReport report;
  auto& mt = report.metrics;
  mt.av_db = required(m, "av_db");
  mt.f3db = required(m, "f3db");
  mt.ugb = required(m, "ugb");
  mt.phase_margin = required(m, "phase_margin");
  mt.noise_psd = required(m, "noise_psd");
  mt.power = std::abs(required(m, "power"));
  mt.area = required(m, "area");
  const double i5 = std::abs(required(m, "i5"));
  const double i6 = std::abs(required(m, "i6"));
  // No transient analysis: slew rate from the DC currents as in the analytical model.
  mt.slew_rate = std::min(i5 / required(m, "cc"), i6 / required(m, "c_load"));

  auto flags = [&](const char* tag) {
    opamp::SaturationFlags f{};
    for (std::size_t k = 0; k < opamp::kDeviceCount; ++k) {
      const std::string base = std::string(tag) + "_" + kDeviceNames[k] + "_";
      const double vgs = required(m, base + "vgs");
      const double vds = required(m, base + "vds");
      const double vth = required(m, base + "vth");
      f[k] = std::abs(vds) >= std::abs(vgs - vth);
    }
    return f;
  };
  report.saturation_low = flags("lo");
  report.saturation_high = flags("hi");

  opamp::check_specs(mt, specs, report.violations);
  opamp::check_saturation_flags(report.saturation_low, "vcm_low", report.violations);
  opamp::check_saturation_flags(report.saturation_high, "vcm_high", report.violations);
  report.pass = report.violations.empty();
  return report;
}

SpiceEvaluator::SpiceEvaluator(SpiceConfig config, SpecTable specs, TechParams tech)
    : SpiceEvaluator(config, NetlistTemplate::opamp(config.model_include_path), specs, tech) {}

SpiceEvaluator::SpiceEvaluator(SpiceConfig config, NetlistTemplate tmpl, SpecTable specs,
                               TechParams tech)
    : config_(std::move(config)), template_(std::move(tmpl)), specs_(specs), tech_(tech) {
  template_.validate();
}

EvalReport SpiceEvaluator::operator()(const DesignVector& dv) const {
  EvalReport report;
  opamp::check_sizes(dv, specs_, tech_, report.violations);
  if (!report.violations.empty()) {
    report.metrics.area = opamp::area_fitness(dv, tech_);
    return report;
  }
  try {
    const auto raw = run_simulator(emit_netlist(dv, tech_, specs_, template_),
                                   config_.simulator_path, config_.timeout_seconds);
    return parse_results(raw, specs_);
  } catch (const SimulationError& e) {
    if (e.kind() == SimulationError::Kind::unavailable) throw;
    report.violations.push_back(e.kind() == SimulationError::Kind::timeout ? "simulation timeout"
                                                                           : "simulation failed");
  } catch (const ParseError& e) {
    report.violations.push_back(e.what());
  }
  report.metrics.area = opamp::area_fitness(dv, tech_);
  return report;
}

}  // namespace hpso::spice

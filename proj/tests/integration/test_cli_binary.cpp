#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>

#include "support.hpp"

namespace {

const std::filesystem::path kCli = HPSO_CLI_PATH;

struct Shell {
  int code;
  std::string out;
  std::string err;
};

// Runs the tool with `args`, capturing both streams through files in `dir`.
Shell invoke(const testing::ScratchDir& dir, const std::string& args) {
  const auto out = dir / "stdout", err = dir / "stderr";
  const std::string cmd = "'" + kCli.string() + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status), testing::slurp(out), testing::slurp(err)};
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

const char* kOpamp = "[run]\nproblem = opamp-analytic\nseeds = 3,4\n"
                     "[pso]\nswarm_size = 8\nmax_iterations = 15\nthreads = 2\n";

}  // namespace

TEST_SUITE("cli-binary") {

TEST_CASE("an analytic run is reproducible byte for byte") {
  testing::ScratchDir dir;
  testing::spit(dir / "c.ini", kOpamp);
  auto a = invoke(dir, "run --config '" + (dir / "c.ini").string() + "' --out '" + (dir / "a").string() + "'");
  REQUIRE(a.code == 0);
  CHECK(a.out.starts_with("best area: "));
  auto b = invoke(dir, "run --config '" + (dir / "c.ini").string() + "' --out '" + (dir / "b").string() + "'");
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
  for (const char* f : {"run_01_seed_3.csv", "run_02_seed_4.csv", "summary.txt"}) {
    CAPTURE(f);
    const auto x = testing::slurp(dir / "a" / f);
    CHECK_FALSE(x.empty());
    CHECK(x == testing::slurp(dir / "b" / f));
  }
  CHECK(lines(testing::slurp(dir / "a" / "run_01_seed_3.csv")) == 16);

  // Overrides from the command line.
  auto c = invoke(dir, "run --config '" + (dir / "c.ini").string() + "' --seeds 3 --iters 4 --swarm 5 --out '" +
                         (dir / "c").string() + "'");
  REQUIRE(c.code == 0);
  CHECK(lines(testing::slurp(dir / "c" / "run_01_seed_3.csv")) == 5);
  CHECK_FALSE(std::filesystem::exists(dir / "c" / "run_02_seed_4.csv"));

  // The best design goes back out as a netlist.
  auto e = invoke(dir, "export-netlist --config '" + (dir / "c.ini").string() + "' --from-summary '" +
                         (dir / "a" / "summary.txt").string() + "'");
  REQUIRE(e.code == 0);
  const std::filesystem::path net = e.out.substr(0, e.out.find('\n'));
  const auto text = testing::slurp(net);
  CHECK(text.find("M6 out n1 vdd vdd pch W=") != std::string::npos);
  CHECK(text.find("{{") == std::string::npos);
}

TEST_CASE("explicit designs export verbatim") {
  testing::ScratchDir dir;
  testing::spit(dir / "c.ini", "[run]\noutput_dir = net\n");
  auto r = invoke(dir, "export-netlist --config '" + (dir / "c.ini").string() +
                         "' --design 266e-9,783e-9,126e-9,1115e-9,191e-9,29.7e-6");
  REQUIRE(r.code == 0);
  const auto text = testing::slurp(dir / "net" / "netlist.cir");
  CHECK(text.find("W=266n") != std::string::npos);
  CHECK(text.find("W=1115n") != std::string::npos);
  CHECK(invoke(dir, "export-netlist --config '" + (dir / "c.ini").string() + "' --design 1,2,3").code == 1);
}

TEST_CASE("bench comparison") {
  testing::ScratchDir dir;
  testing::spit(dir / "b.ini", "[run]\nproblem = bench\nseeds = 1,2,3\noutput_dir = cmp\n"
                               "[pso]\nswarm_size = 6\nmax_iterations = 10\n");
  auto r = invoke(dir, "bench --config '" + (dir / "b.ini").string() + "'");
  REQUIRE(r.code == 0);
  const auto csv = testing::slurp(dir / "cmp" / "comparison.csv");
  CHECK(lines(csv) == 3);
  CHECK(csv.find("\nhybrid,") != std::string::npos);
  CHECK(csv.find("\nstandard,") != std::string::npos);
}

TEST_CASE("exit codes") {
  testing::ScratchDir dir;
  testing::spit(dir / "c.ini", kOpamp);
  const auto cfg = "--config '" + (dir / "c.ini").string() + "'";
  CHECK(invoke(dir, "").code == 1);
  CHECK(invoke(dir, "frobnicate").code == 1);
  CHECK(invoke(dir, "run").code == 1);
  const auto z = invoke(dir, "run " + cfg + " --iters 0");
  CHECK(z.code == 1);
  CHECK(z.err.find("pso.max_iterations") != std::string::npos);
  CHECK(invoke(dir, "run " + cfg + " --backend quantum").code == 1);
  CHECK(invoke(dir, "run " + cfg + " --backend spice").code == 1);
  CHECK(invoke(dir, "run --config '" + (dir / "absent.ini").string() + "'").code == 1);

  testing::spit(dir / "m.lib", "* models\n");
  testing::spit(dir / "s.ini", "[run]\nproblem = opamp-spice\n[spice]\nmodel_include_path = m.lib\n"
                               "simulator_path = /no/such/ngspice\n");
  const auto u = invoke(dir, "run --config '" + (dir / "s.ini").string() + "' --out '" + (dir / "s").string() + "'");
  CHECK(u.code == 2);
  CHECK(u.err.find("backend unavailable") != std::string::npos);
  CHECK(invoke(dir, "--help").code == 0);
}

}  // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "manifest.hpp"
#include "run_config.hpp"
#include "vbsde/bundle.hpp"
#include "vbsde/errors.hpp"
#include "vbsde/field_io.hpp"

using namespace vbsde;
using namespace vbsde::cli;
namespace fs = std::filesystem;
using nlohmann::json;
using std::numbers::pi;

namespace {

// Fresh scratch directory per call, under the system temp dir.
fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("vbsde_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

int run(const std::string& cmd, const fs::path& cfg) {
  std::ostringstream log;
  return run_command(cmd, cfg, log);
}

json manifest(const fs::path& dir) { return json::parse(read_file(dir / "manifest.json")); }

std::vector<std::vector<double>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = RunConfig::parse("# comment\nN = 16\n  nu=0.25   # trailing\n\npsi = sin(1,0)\n");
  CHECK(c.integer("N") == 16);
  CHECK(c.number("nu") == 0.25);
  CHECK(c.string("psi") == "sin(1,0)");
  CHECK_FALSE(c.has("L"));

  auto message = [](const std::string& text) {
    try {
      RunConfig::parse(text, "x.cfg");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("N = 16\nbogus = 1\n") == "x.cfg:2: unknown key 'bogus'");
  CHECK(message("N = 16\n\nN = 8\n") == "x.cfg:3: duplicate key 'N' (first set on line 1)");
  CHECK(message("N 16\n") == "x.cfg:1: expected 'key = value'");
  CHECK(message("nu =\n") == "x.cfg:1: empty value for 'nu'");

  const auto bad = RunConfig::parse("N = 16\nL = ten\n", "y.cfg");
  try {
    (void)bad.integer("L");
    FAIL("expected a type error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()) == "y.cfg:2: L: expected an integer, got 'ten'");
  }
  CHECK_THROWS_AS(RunConfig::parse("control_variate = maybe\n").boolean("control_variate"), ConfigError);
  CHECK_THROWS_AS(solver_config(RunConfig::parse("N = 7\n")), ConfigError);
  const SolverConfig s = solver_config(RunConfig::parse("alpha = auto\ncontrol_variate = false\nbase_seed = 18446744073709551615\n"));
  CHECK_FALSE(s.alpha);
  CHECK_FALSE(s.control_variate);
  CHECK(s.base_seed == 18446744073709551615ull);
}

TEST_CASE("psi expressions") {
  const int n = 16;
  CHECK(l2_norm(parse_psi("sin(1,0)", n) - ScalarField::sine(n, 1, 0)) == 0.0);
  const ScalarField f = parse_psi(" 1.0*sin(1,0) + 1.0*cos(1,1) - 2.5e-1 * cos( 0 , -3 )", n);
  const ScalarField g = ScalarField::sine(n, 1, 0) + ScalarField::cosine(n, 1, 1) - 0.25 * ScalarField::cosine(n, 0, -3);
  CHECK(l2_norm(f - g) < 1e-15);
  CHECK(l2_norm(parse_psi("-sin(2,1)", n) + ScalarField::sine(n, 2, 1)) == 0.0);
  CHECK(parse_psi("0", n).is_zero());
  CHECK_THROWS_AS(parse_psi("", n), ConfigError);
  CHECK_THROWS_AS(parse_psi("1", n), ConfigError);
  CHECK_THROWS_AS(parse_psi("cos(0,0)", n), ConfigError);
  CHECK_THROWS_AS(parse_psi("sin(8,0)", n), ConfigError);
  CHECK_THROWS_AS(parse_psi("sin(1,0) cos(1,1)", n), ConfigError);
  CHECK_THROWS_AS(parse_psi("tan(1,0)", n), ConfigError);
  CHECK_THROWS_AS(parse_psi("sin(1 0)", n), ConfigError);
}

TEST_CASE("hashes") {
  // git hash-object of an empty blob and of "hello\n"
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("oracle command") {
  const fs::path dir = scratch("oracle");
  const fs::path cfg = write_config(dir, "a.cfg",
                                    "psi = sin(1,0)\nN = 16\nL = 64\nnu = 0.1\nT = 0.5\noutput_dir = " +
                                        (dir / "out").string() + "\n");
  REQUIRE(run("oracle", cfg) == kOk);
  const auto rows = read_csv(dir / "out" / "oracle.csv");
  REQUIRE(rows.size() == 65);
  for (const auto& r : rows) {
    CHECK(std::abs(r[1] - 0.5 * std::exp(-8 * pi * pi * 0.1 * r[0])) < 1e-5);
    CHECK(std::abs(r[2] - 0.5 / (4 * pi * pi) * std::exp(-8 * pi * pi * 0.1 * r[0])) < 1e-7);
  }
  const json m = manifest(dir / "out");
  CHECK(m["status"] == "ok");
  CHECK(m["exit_code"] == 0);
  CHECK(m["outputs"].size() == 2);
  CHECK(m["config"]["N"] == "16");
  CHECK(m["input_hash"].get<std::string>().size() == 40);
  const std::string first = read_file(dir / "out" / "oracle.csv");
  REQUIRE(run("oracle", cfg) == kOk);
  CHECK(read_file(dir / "out" / "oracle.csv") == first);
  CHECK(manifest(dir / "out")["outputs"] == m["outputs"]);

  const fs::path zero = write_config(dir, "z.cfg",
                                     "psi = 0\nN = 8\nL = 4\nnu = 0.1\nT = 0.5\noutput_dir = " +
                                         (dir / "zero").string() + "\n");
  REQUIRE(run("oracle", zero) == kOk);
  for (const auto& r : read_csv(dir / "zero" / "oracle.csv")) {
    CHECK(r[1] == 0.0);
    CHECK(r[2] == 0.0);
    CHECK(r[3] == 0.0);
  }
}

TEST_CASE("config errors exit 2 and still write a manifest") {
  const fs::path dir = scratch("errors");
  const fs::path out = dir / "out";
  const fs::path cfg = write_config(dir, "bad.cfg", "output_dir = " + out.string() + "\nN = 16\nwat = 1\n");
  CHECK(run("oracle", cfg) == kConfig);
  // the parse failed before output_dir was known, so the default is used
  const fs::path cwd = fs::current_path();
  fs::current_path(dir);
  CHECK(run("oracle", "bad.cfg") == kConfig);
  const json m = manifest(dir / "vbsde_out");
  CHECK(m["status"] == "config_error");
  CHECK(m["message"].get<std::string>().find("bad.cfg:3") != std::string::npos);
  CHECK(run("oracle", "missing.cfg") == kConfig);
  fs::current_path(cwd);

  const fs::path nomix = write_config(dir, "c.cfg", "psi = sin(1,0)\npsi_file = x.vbsf\nN = 16\nL = 4\nnu = 0.1\nT = 1\noutput_dir = " + out.string() + "\n");
  CHECK(run("oracle", nomix) == kConfig);
  CHECK(manifest(out)["status"] == "config_error");
}

TEST_CASE("config directory from the environment") {
  const fs::path dir = scratch("envdir");
  write_config(dir, "env.cfg", "psi = sin(1,0)\nN = 8\nL = 4\nnu = 0.1\nT = 0.1\noutput_dir = " + (dir / "out").string() + "\n");
  ::setenv("VBSDE_CONFIG_DIR", dir.c_str(), 1);
  CHECK(run("oracle", "env.cfg") == kOk);
  ::unsetenv("VBSDE_CONFIG_DIR");
  CHECK(fs::exists(dir / "out" / "oracle.csv"));
}

TEST_CASE("solve, compare and diagnose") {
  const fs::path dir = scratch("solve");
  const std::string common = "N = 16\nL = 16\nnu = 0.1\nT = 0.5\nM_inner = 300\nM_outer = 4\npicard_tol_floor_multiple = 2\n";
  // psi given through a checkpoint relative to the config file
  save_field(dir / "psi.vbsf", ScalarField::sine(16, 1, 0));
  const fs::path cfg = write_config(dir, "s.cfg", "psi_file = psi.vbsf\n" + common + "output_dir = " + (dir / "sol").string() + "\n");
  REQUIRE(run("solve", cfg) == kOk);
  const json m = manifest(dir / "sol");
  CHECK(m["status"] == "ok");
  CHECK(m["inputs"].size() == 1);
  const json d = json::parse(read_file(dir / "sol" / "diagnostics.json"));
  CHECK(d["max_principle"]["pass"] == true);
  CHECK(d["contraction"]["converged"] == true);
  const BsdeSolution sol = load_bundle(dir / "sol");
  CHECK(sol.Y.steps() == 16);
  CHECK(sol.Y.stats);

  // rerun with more workers: byte-identical outputs
  const fs::path cfg2 = write_config(dir, "s2.cfg", "psi_file = psi.vbsf\n" + common + "workers = 2\noutput_dir = " + (dir / "sol2").string() + "\n");
  REQUIRE(run("solve", cfg2) == kOk);
  CHECK(manifest(dir / "sol2")["outputs"] == m["outputs"]);

  const fs::path ocfg = write_config(dir, "o.cfg", "psi = sin(1,0)\nN = 16\nL = 32\nnu = 0.1\nT = 0.5\noutput_dir = " + (dir / "orc").string() + "\n");
  REQUIRE(run("oracle", ocfg) == kOk);
  const fs::path ccfg = write_config(dir, "c.cfg", "solution = sol\ntrajectory = orc/trajectory.vbtr\npaths = 3\noutput_dir = " + (dir / "cmp").string() + "\n");
  REQUIRE(run("compare", ccfg) == kOk);
  const json s = json::parse(read_file(dir / "cmp" / "compare_summary.json"));
  CHECK(s["paths"] == 3);
  CHECK(s["nodes"] == 17);
  CHECK(s["max_error"].get<double>() < 0.02);
  CHECK(read_csv(dir / "cmp" / "compare.csv").size() == 3 * 17);

  // the oracle against itself
  const fs::path self = write_config(dir, "self.cfg", "solution = orc/trajectory.vbtr\ntrajectory = orc/trajectory.vbtr\npaths = 2\noutput_dir = " + (dir / "self").string() + "\n");
  REQUIRE(run("compare", self) == kOk);
  for (const auto& r : read_csv(dir / "self" / "compare.csv")) CHECK(r[3] == 0.0);

  const fs::path zero = write_config(dir, "p0.cfg", "solution = sol\ntrajectory = orc/trajectory.vbtr\npaths = 0\noutput_dir = " + (dir / "p0").string() + "\n");
  CHECK(run("compare", zero) == kConfig);
  const fs::path mism = write_config(dir, "mm.cfg", "psi = sin(1,0)\nN = 16\nL = 32\nnu = 0.2\nT = 0.5\noutput_dir = " + (dir / "orc2").string() + "\n");
  REQUIRE(run("oracle", mism) == kOk);
  const fs::path mcfg = write_config(dir, "m.cfg", "solution = sol\ntrajectory = orc2/trajectory.vbtr\npaths = 1\noutput_dir = " + (dir / "mm").string() + "\n");
  CHECK(run("compare", mcfg) == kConfig);

  const fs::path dcfg = write_config(dir, "d.cfg", "solution = sol\npaths = 2\noutput_dir = " + (dir / "diag").string() + "\n");
  REQUIRE(run("diagnose", dcfg) == kOk);
  const json dd = json::parse(read_file(dir / "diag" / "diagnostics.json"));
  CHECK(dd["residual"]["paths"] == 2);
  CHECK(dd["z_bmo"] == d["z_bmo"]);
}

TEST_CASE("solve failure modes") {
  const fs::path dir = scratch("fail");
  const fs::path zero = write_config(dir, "z.cfg", "psi = 0\nN = 8\nL = 4\nM_inner = 10\noutput_dir = " + (dir / "zero").string() + "\n");
  REQUIRE(run("solve", zero) == kOk);
  for (const auto& f : load_bundle(dir / "zero").Y.fields) CHECK(f.is_zero());

  const fs::path tiny = write_config(dir, "t.cfg", "psi = sin(1,0) + cos(1,1)\nN = 8\nL = 8\nnu = 0.5\nT = 0.25\nM_inner = 2\npicard_tol = 1e-12\noutput_dir = " + (dir / "tiny").string() + "\n");
  CHECK(run("solve", tiny) == kConfig);
  CHECK(manifest(dir / "tiny")["message"].get<std::string>().find("M_inner") != std::string::npos);

  const fs::path slow = write_config(dir, "n.cfg", "psi = sin(1,0) + cos(1,1)\nN = 8\nL = 8\nnu = 0.5\nT = 0.25\nM_inner = 20\nalpha = 0\npicard_tol_floor_multiple = 1e-9\nmax_iter = 3\noutput_dir = " + (dir / "slow").string() + "\n");
  CHECK(run("solve", slow) == kNonConvergence);
  const json m = manifest(dir / "slow");
  CHECK(m["status"] == "non_convergence");
  CHECK(m["ratios"].size() == 2);

  const fs::path blow = write_config(dir, "b.cfg", "psi = 50*sin(1,0) + 50*cos(1,1)\nN = 8\nL = 2\nnu = 0.01\nT = 1\nM_inner = 10\noutput_dir = " + (dir / "blow").string() + "\n");
  CHECK(run("solve", blow) == kNumerical);
  CHECK(manifest(dir / "blow")["status"] == "numerical_error");
}

#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "manifest.hpp"
#include "run_config.hpp"
#include "vbsde/biot_savart.hpp"
#include "vbsde/bundle.hpp"
#include "vbsde/diagnostics.hpp"
#include "vbsde/errors.hpp"
#include "vbsde/field_io.hpp"
#include "vbsde/spectral_oracle.hpp"

namespace vbsde::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr int kCsvSchemaVersion = 1;

// Shortest round-trip decimal form.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ConfigError("cannot write " + path.string());
}

json echo(const RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.entries()) j[k] = v;
  return j;
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)); }

void cmd_oracle(const RunConfig& cfg, Manifest& man, std::ostream& log) {
  const int n = static_cast<int>(cfg.require(cfg.integer("N"), "N"));
  const int L = static_cast<int>(cfg.require(cfg.integer("L"), "L"));
  const double nu = cfg.require(cfg.number("nu"), "nu");
  const double T = cfg.require(cfg.number("T"), "T");
  validate_grid_size(n);
  if (cfg.has("psi_file")) man.add_input("psi_file", cfg.input_path("psi_file"));
  const ScalarField psi = load_psi(cfg, n);

  auto t0 = Clock::now();
  const VorticityTrajectory traj = evolve(psi, nu, T, L);
  man.time_phase("evolve", seconds_since(t0));
  log << "oracle: evolved N=" << n << " L=" << L << " to T=" << T << '\n';

  t0 = Clock::now();
  const fs::path dir = man.output_dir();
  fs::create_directories(dir);
  save_trajectory(dir / "trajectory.vbtr", traj.to_data());
  man.add_output("trajectory.vbtr");
  std::string csv = "tau,enstrophy,energy,sup_omega\n";
  for (int m = 0; m <= traj.steps(); ++m) {
    const ScalarField& w = traj.at(m);
    const VectorField u = apply_K(w.projected_mean_zero());
    const double ens = std::pow(l2_norm(w), 2);
    const double energy = std::pow(l2_norm(u.c1), 2) + std::pow(l2_norm(u.c2), 2);
    csv += num(m * traj.dt()) + "," + num(ens) + "," + num(energy) + "," + num(sup_norm(w)) + "\n";
  }
  write_text(dir / "oracle.csv", csv);
  man.add_output("oracle.csv");
  man.time_phase("write", seconds_since(t0));
  man.extra()["csv_schema_version"] = kCsvSchemaVersion;
}

void cmd_solve(const RunConfig& cfg, Manifest& man, std::ostream& log) {
  const SolverConfig sc = solver_config(cfg);
  if (cfg.has("psi_file")) man.add_input("psi_file", cfg.input_path("psi_file"));
  const ScalarField psi = load_psi(cfg, sc.N);

  auto t0 = Clock::now();
  BsdeSolution sol;
  try {
    sol = picard_solve(psi, sc);
  } catch (const ConvergenceError&) {
    man.time_phase("solve", seconds_since(t0));
    throw;
  }
  man.time_phase("solve", seconds_since(t0));
  json iters = json::array();
  for (const auto& h : sol.history) iters.push_back(h.seconds);
  man.extra()["iteration_seconds"] = iters;
  log << "solve: converged after " << sol.Y.iteration << " weighted iterations (alpha = " << sol.alpha
      << ")\n";

  t0 = Clock::now();
  const std::string report = diagnostics_report(sol);
  man.time_phase("diagnostics", seconds_since(t0));

  t0 = Clock::now();
  const fs::path dir = man.output_dir();
  for (const auto& f : save_bundle(dir, sol)) man.add_output(f);
  write_text(dir / "diagnostics.json", report + "\n");
  man.add_output("diagnostics.json");
  man.time_phase("write", seconds_since(t0));
}

struct Loaded {
  std::vector<ScalarField> fields;
  double dt = 0.0;
  double nu = 0.0;
};

Loaded load_fields(const fs::path& p, Manifest& man, const std::string& role) {
  if (fs::is_directory(p)) {
    for (const char* f : {"solution.json", "psi.vbsf", "Y.vbtr"}) man.add_input(role + "/" + f, p / f);
    const BsdeSolution sol = load_bundle(p);
    return {sol.Y.fields, sol.Y.dt, sol.config.nu};
  }
  man.add_input(role, p);
  TrajectoryData d = load_trajectory(p);
  return {std::move(d.fields), d.dt, d.nu};
}

void cmd_compare(const RunConfig& cfg, Manifest& man, std::ostream& log) {
  const long long paths = cfg.require(cfg.integer("paths"), "paths");
  if (paths < 1) throw ConfigError("paths must be >= 1");
  const std::uint64_t seed = cfg.unsigned_integer("base_seed").value_or(1);

  auto t0 = Clock::now();
  const Loaded y = load_fields(cfg.input_path("solution"), man, "solution");
  const Loaded w = load_fields(cfg.input_path("trajectory"), man, "trajectory");
  man.time_phase("load", seconds_since(t0));
  const int L = static_cast<int>(y.fields.size()) - 1;
  const int Lw = static_cast<int>(w.fields.size()) - 1;
  const int n = y.fields.front().grid_size();
  if (w.fields.front().grid_size() != n) throw ConfigError("compare: grid sizes differ");
  if (!close(y.nu, w.nu)) throw ConfigError("compare: viscosities differ");
  if (!close(y.dt * L, w.dt * Lw)) throw ConfigError("compare: horizons differ");
  if (L < 1 || Lw % L != 0) throw ConfigError("compare: trajectory steps must be a multiple of the solution steps");
  const int stride = Lw / L;
  const double T = y.dt * L;

  t0 = Clock::now();
  std::string csv = "path,m,t,l2_error\n";
  std::vector<double> node_max(static_cast<std::size_t>(L) + 1, 0.0);
  double sum = 0.0, worst = 0.0;
  json worst_at = json::object();
  for (long long p = 0; p < paths; ++p) {
    const BrownianPath path = simulate(derive_seed(seed, 0xC0, static_cast<std::uint64_t>(p)), L, T);
    for (int j = 0; j <= L; ++j) {
      const std::size_t k = static_cast<std::size_t>(L - j);
      const ScalarField d = y.fields[k] - w.fields[k * stride];
      const double e = d.is_zero() ? 0.0 : l2_norm(translate(d, scaled_displacement(path, j, y.nu)));
      csv += std::to_string(p) + "," + std::to_string(j) + "," + num(j * y.dt) + "," + num(e) + "\n";
      node_max[static_cast<std::size_t>(j)] = std::max(node_max[static_cast<std::size_t>(j)], e);
      sum += e;
      if (e > worst) {
        worst = e;
        worst_at = {{"path", p}, {"m", j}};
      }
    }
  }
  man.time_phase("compare", seconds_since(t0));
  const double mean = sum / (static_cast<double>(paths) * (L + 1));
  log << "compare: max L2 error " << worst << ", mean " << mean << '\n';

  const fs::path dir = man.output_dir();
  fs::create_directories(dir);
  write_text(dir / "compare.csv", csv);
  man.add_output("compare.csv");
  json s;
  s["schema_version"] = kCsvSchemaVersion;
  s["paths"] = paths;
  s["nodes"] = L + 1;
  s["max_error"] = worst;
  s["mean_error"] = mean;
  s["worst"] = worst_at;
  s["node_max_error"] = node_max;
  write_text(dir / "compare_summary.json", s.dump(2) + "\n");
  man.add_output("compare_summary.json");
}

void cmd_diagnose(const RunConfig& cfg, Manifest& man, std::ostream& log) {
  const fs::path bundle = cfg.input_path("solution");
  for (const char* f : {"solution.json", "psi.vbsf", "Y.vbtr"}) man.add_input(std::string("solution/") + f, bundle / f);
  auto t0 = Clock::now();
  const BsdeSolution sol = load_bundle(bundle);
  json report = json::parse(diagnostics_report(sol));
  if (const auto paths = cfg.integer("paths")) {
    if (*paths < 1) throw ConfigError("paths must be >= 1");
    const std::uint64_t seed = cfg.unsigned_integer("base_seed").value_or(sol.config.base_seed);
    std::vector<double> r;
    for (long long p = 0; p < *paths; ++p)
      r.push_back(bsde_residual(sol, simulate(derive_seed(seed, 0xE5, static_cast<std::uint64_t>(p)),
                                              sol.config.L, sol.config.T)));
    double ms = 0.0;
    for (double v : r) ms += v * v;
    report["residual"] = {{"paths", *paths},
                          {"max", *std::max_element(r.begin(), r.end())},
                          {"rms", std::sqrt(ms / static_cast<double>(r.size()))},
                          {"per_path", r}};
  }
  man.time_phase("diagnostics", seconds_since(t0));
  log << "diagnose: contraction " << report["contraction"]["status"].get<std::string>() << ", max principle "
      << (report["max_principle"]["pass"].get<bool>() ? "pass" : "fail") << '\n';
  const fs::path dir = man.output_dir();
  fs::create_directories(dir);
  write_text(dir / "diagnostics.json", report.dump(2) + "\n");
  man.add_output("diagnostics.json");
}

}  // namespace

int run_command(const std::string& command, const fs::path& config_path, std::ostream& log) {
  Manifest man(command, "vbsde_out");
  int code = kOk;
  std::string message;
  try {
    const RunConfig cfg = RunConfig::load(config_path);
    man.set_output_dir(cfg.output_dir());
    man.set_config(cfg.text(), echo(cfg));
    if (command == "oracle") {
      cmd_oracle(cfg, man, log);
    } else if (command == "solve") {
      cmd_solve(cfg, man, log);
    } else if (command == "compare") {
      cmd_compare(cfg, man, log);
    } else if (command == "diagnose") {
      cmd_diagnose(cfg, man, log);
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
    man.set_status("ok", kOk);
  } catch (const ConvergenceError& e) {
    code = kNonConvergence;
    man.extra()["ratios"] = e.ratios();
    message = e.what();
    man.set_status("non_convergence", code, message);
  } catch (const NumericalError& e) {
    code = kNumerical;
    message = e.what();
    man.set_status("numerical_error", code, message);
  } catch (const ConfigError& e) {
    code = kConfig;
    message = e.what();
    man.set_status("config_error", code, message);
  } catch (const DomainError& e) {
    code = kConfig;
    message = e.what();
    man.set_status("config_error", code, message);
  } catch (const fs::filesystem_error& e) {
    code = kConfig;
    message = e.what();
    man.set_status("config_error", code, message);
  } catch (const std::exception& e) {
    code = kInternal;
    message = e.what();
    man.set_status("internal_error", code, message);
  }
  if (code != kOk) log << "vbsde " << command << ": error: " << message << '\n';
  if (!man.write()) log << "warning: could not write " << (man.output_dir() / "manifest.json").string() << '\n';
  return code;
}

}  // namespace vbsde::cli

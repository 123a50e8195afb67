#include "vbsde/bundle.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "vbsde/errors.hpp"
#include "vbsde/field_io.hpp"

namespace vbsde {
namespace {

using detail::get;
using detail::put;
using nlohmann::json;

constexpr std::uint16_t kStatsVersion = 1;

// The worker count is left out: results do not depend on it.
json config_json(const SolverConfig& c) {
  json j;
  j["N"] = c.N;
  j["L"] = c.L;
  j["M_outer"] = c.M_outer;
  j["M_inner"] = c.M_inner;
  j["nu"] = c.nu;
  j["T"] = c.T;
  j["alpha"] = c.alpha ? json(*c.alpha) : json(nullptr);
  j["picard_tol"] = c.picard_tol;
  j["picard_tol_floor_multiple"] =
      c.picard_tol_floor_multiple ? json(*c.picard_tol_floor_multiple) : json(nullptr);
  j["max_iter"] = c.max_iter;
  j["base_seed"] = c.base_seed;
  j["control_variate"] = c.control_variate;
  j["batches"] = c.batches;
  j["oversample"] = c.oversample;
  return j;
}

SolverConfig config_from_json(const json& j) {
  SolverConfig c;
  c.N = j.at("N");
  c.L = j.at("L");
  c.M_outer = j.at("M_outer");
  c.M_inner = j.at("M_inner");
  c.nu = j.at("nu");
  c.T = j.at("T");
  if (!j.at("alpha").is_null()) c.alpha = j.at("alpha").get<double>();
  c.picard_tol = j.at("picard_tol");
  if (!j.at("picard_tol_floor_multiple").is_null())
    c.picard_tol_floor_multiple = j.at("picard_tol_floor_multiple").get<double>();
  c.max_iter = j.at("max_iter");
  c.base_seed = j.at("base_seed");
  c.control_variate = j.at("control_variate");
  c.batches = j.at("batches");
  c.oversample = j.at("oversample");
  return c;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

void write_stats(std::ostream& out, const SamplingStats& stats, int n) {
  const std::size_t nodes = stats.pooled_se.size();
  out.write("VBST", 4);
  put<std::uint16_t>(out, kStatsVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(nodes - 1));
  put<std::uint16_t>(out, static_cast<std::uint16_t>(n));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(stats.branches));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(stats.batches));
  for (double v : stats.pooled_se) put<double>(out, v);
  for (double v : stats.max_se) put<double>(out, v);
  const std::size_t expect = static_cast<std::size_t>(stats.batches) * n * n;
  for (const auto& bm : stats.batch_means) {
    if (!bm.empty() && bm.size() != expect) throw ConfigError("batch mean block has the wrong size");
    put<std::uint8_t>(out, bm.empty() ? 0 : 1);
    for (double v : bm) put<double>(out, v);
  }
}

SamplingStats read_stats(std::istream& in) {
  detail::expect_magic(in, "VBST");
  const auto version = get<std::uint16_t>(in);
  if (version != kStatsVersion) throw ConfigError("unsupported stats format version " + std::to_string(version));
  SamplingStats s;
  const std::size_t nodes = get<std::uint32_t>(in) + std::size_t{1};
  const int n = get<std::uint16_t>(in);
  s.branches = static_cast<int>(get<std::uint32_t>(in));
  s.batches = static_cast<int>(get<std::uint32_t>(in));
  s.pooled_se.resize(nodes);
  s.max_se.resize(nodes);
  for (double& v : s.pooled_se) v = get<double>(in);
  for (double& v : s.max_se) v = get<double>(in);
  s.batch_means.resize(nodes);
  const std::size_t block = static_cast<std::size_t>(s.batches) * n * n;
  for (auto& bm : s.batch_means) {
    if (get<std::uint8_t>(in) == 0) continue;
    bm.resize(block);
    for (double& v : bm) v = get<double>(in);
  }
  return s;
}

std::string solution_json(const BsdeSolution& sol) {
  json j;
  j["schema_version"] = kBundleSchemaVersion;
  j["config"] = config_json(sol.config);
  j["alpha"] = sol.alpha;
  j["C0"] = sol.C0;
  j["C1"] = sol.C1;
  j["tolerance"] = sol.tolerance;
  j["converged"] = sol.converged;
  j["final_iteration"] = sol.Y.iteration;
  json hist = json::array();
  for (const auto& h : sol.history) {
    hist.push_back({{"iteration", h.iteration},
                    {"delta_norm", h.delta_norm},
                    {"delta_sup", h.delta_sup},
                    {"delta_bmo", h.delta_bmo},
                    {"solution_floor", h.solution_floor},
                    {"difference_floor", h.difference_floor},
                    {"sup_abs", h.sup_abs},
                    {"mc_tolerance", h.mc_tolerance}});
  }
  j["history"] = hist;
  j["ratios"] = sol.ratios;
  j["ratio_above_noise"] = sol.ratio_above_noise;
  return j.dump(2) + "\n";
}

std::vector<std::string> save_bundle(const std::filesystem::path& dir, const BsdeSolution& sol) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files{"solution.json", "psi.vbsf", "Y.vbtr"};
  {
    std::ofstream out(dir / "solution.json", std::ios::binary);
    out << solution_json(sol);
    if (!out) throw ConfigError("cannot write " + (dir / "solution.json").string());
  }
  save_field(dir / "psi.vbsf", sol.psi);
  save_trajectory(dir / "Y.vbtr", {sol.Y.fields, sol.Y.dt, sol.config.nu});
  std::filesystem::remove(dir / "stats.vbst");
  if (sol.Y.stats) {
    std::ofstream out(dir / "stats.vbst", std::ios::binary);
    write_stats(out, *sol.Y.stats, sol.Y.grid_size());
    if (!out) throw ConfigError("cannot write " + (dir / "stats.vbst").string());
    files.push_back("stats.vbst");
  }
  return files;
}

BsdeSolution load_bundle(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_text(dir / "solution.json"));
  } catch (const json::exception& e) {
    throw ConfigError("malformed " + (dir / "solution.json").string() + ": " + e.what());
  }
  if (j.value("schema_version", 0) != kBundleSchemaVersion)
    throw ConfigError("unsupported bundle schema in " + dir.string());
  BsdeSolution sol;
  try {
    sol.config = config_from_json(j.at("config"));
    sol.alpha = j.at("alpha");
    sol.C0 = j.at("C0");
    sol.C1 = j.at("C1");
    sol.tolerance = j.at("tolerance");
    sol.converged = j.at("converged");
    for (const auto& h : j.at("history")) {
      IterationRecord r;
      r.iteration = h.at("iteration");
      r.delta_norm = h.at("delta_norm");
      r.delta_sup = h.at("delta_sup");
      r.delta_bmo = h.at("delta_bmo");
      r.solution_floor = h.at("solution_floor");
      r.difference_floor = h.at("difference_floor");
      r.sup_abs = h.at("sup_abs");
      r.mc_tolerance = h.at("mc_tolerance");
      sol.history.push_back(r);
    }
    sol.ratios = j.at("ratios").get<std::vector<double>>();
    sol.ratio_above_noise = j.at("ratio_above_noise").get<std::vector<bool>>();
    sol.Y.iteration = j.at("final_iteration");
  } catch (const json::exception& e) {
    throw ConfigError("malformed " + (dir / "solution.json").string() + ": " + e.what());
  }
  sol.psi = load_field(dir / "psi.vbsf");
  const TrajectoryData y = load_trajectory(dir / "Y.vbtr");
  sol.Y.fields = y.fields;
  sol.Y.dt = y.dt;
  sol.Y.alpha = sol.alpha;
  if (std::filesystem::exists(dir / "stats.vbst")) {
    std::ifstream in(dir / "stats.vbst", std::ios::binary);
    sol.Y.stats = read_stats(in);
  }
  if (sol.Y.steps() != sol.config.L || sol.Y.grid_size() != sol.config.N)
    throw ConfigError("bundle fields do not match its config");
  sol.Z_fields = extract_Z(sol.Y);
  return sol;
}

}  // namespace vbsde

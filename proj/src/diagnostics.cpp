#include "vbsde/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "vbsde/biot_savart.hpp"
#include "vbsde/errors.hpp"
#include "quadrature.hpp"

namespace vbsde {
namespace {

double gradient_energy(const ScalarField& f) {
  const VectorField g = gradient(f);
  return std::pow(l2_norm(g.c1), 2) + std::pow(l2_norm(g.c2), 2);
}

}  // namespace

MaxPrincipleReport max_principle_check(std::span<const IterateBound> iterates, double C1) {
  MaxPrincipleReport r;
  r.margin = iterates.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& it : iterates) {
    const double m = C1 + it.mc_tolerance - it.sup_abs;
    r.margins.push_back(m);
    r.margin = std::min(r.margin, m);
  }
  r.pass = r.margin >= 0.0;
  return r;
}

MaxPrincipleReport max_principle_check(const BsdeSolution& solution, double C1) {
  std::vector<IterateBound> b;
  for (const auto& rec : solution.history) b.push_back({rec.sup_abs, rec.mc_tolerance});
  return max_principle_check(b, C1);
}

double z_bmo_bound(double C1, double C0, double nu, double T) {
  if (!(nu > 0.0)) throw ConfigError("z_bmo_bound: nu must be positive");
  return C1 / nu * std::sqrt(nu + T * C0 * C1 * C1);
}

BmoEstimate z_bmo_proxy(const PicardIterate& it, double nu, int paths, std::uint64_t seed) {
  if (paths < 1) throw ConfigError("z_bmo_proxy needs at least one path");
  const int L = it.steps();
  const double T = it.dt * L;
  const auto Z = extract_Z(it);
  BmoEstimate e;
  // Conditional tail expectation at every t-node, averaged over outer paths.
  std::vector<double> tails(static_cast<std::size_t>(L) + 1, 0.0);
  for (int p = 0; p < paths; ++p) {
    const BrownianPath path = simulate(seed ^ static_cast<std::uint64_t>(p), L, T);
    std::vector<double> g(static_cast<std::size_t>(L) + 1);
    for (int j = 0; j <= L; ++j) {
      const VectorField& z = Z[static_cast<std::size_t>(L - j)];
      const Vec2 s = scaled_displacement(path, j, nu);
      g[static_cast<std::size_t>(j)] =
          std::pow(l2_norm(translate(z.c1, s)), 2) + std::pow(l2_norm(translate(z.c2, s)), 2);
    }
    const auto t = detail::tail_integrals(g, it.dt);
    for (std::size_t j = 0; j < tails.size(); ++j) tails[j] += t[j];
  }
  for (double& t : tails) t /= paths;
  e.squared = *std::max_element(tails.begin(), tails.end());
  e.value = std::sqrt(e.squared);

  if (it.stats && it.stats->batches >= 2) {
    const int G = it.stats->batches;
    const int n = it.grid_size();
    const std::size_t n2 = static_cast<std::size_t>(n) * n;
    std::vector<double> theta(static_cast<std::size_t>(G));
    std::vector<std::vector<double>> energy(static_cast<std::size_t>(G),
                                            std::vector<double>(static_cast<std::size_t>(L) + 1));
    for (int m = 0; m <= L; ++m) {
      const auto& bm = it.stats->batch_means[static_cast<std::size_t>(m)];
      if (bm.empty()) {
        const double g = gradient_energy(it.fields[static_cast<std::size_t>(m)]);
        for (int k = 0; k < G; ++k) energy[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] = g;
        continue;
      }
      std::vector<double> total(n2, 0.0);
      for (int k = 0; k < G; ++k)
        for (std::size_t z = 0; z < n2; ++z) total[z] += bm[static_cast<std::size_t>(k) * n2 + z];
      for (int k = 0; k < G; ++k) {
        std::vector<double> loo(n2);
        for (std::size_t z = 0; z < n2; ++z)
          loo[z] = (total[z] - bm[static_cast<std::size_t>(k) * n2 + z]) / (G - 1);
        const ScalarField f = forward_transform(GridSignal(n, std::move(loo))).projected_mean_zero();
        energy[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] = gradient_energy(f);
      }
    }
    // The integrand is indexed by tau = T - t; the full-interval rule is
    // symmetric under reversal.
    for (int k = 0; k < G; ++k)
      theta[static_cast<std::size_t>(k)] = detail::tail_integrals(energy[static_cast<std::size_t>(k)], it.dt).front();
    double mean = 0.0;
    for (double t : theta) mean += t;
    mean /= G;
    double ss = 0.0;
    for (double t : theta) ss += (t - mean) * (t - mean);
    e.squared_se = std::sqrt((G - 1.0) / G * ss);
    e.se = e.value > 0.0 ? e.squared_se / (2.0 * e.value) : 0.0;
  }
  return e;
}

ZBmoReport z_bmo_check(const BsdeSolution& solution) {
  const auto& c = solution.config;
  ZBmoReport r;
  r.measured = z_bmo_proxy(solution.Y, c.nu, c.M_outer, derive_seed(c.base_seed, 0xB30ull));
  r.bound = z_bmo_bound(solution.C1, solution.C0, c.nu, c.T);
  r.pass = r.measured.value - 3.0 * r.measured.se <= r.bound;
  return r;
}

std::string to_string(ContractionStatus s) {
  switch (s) {
    case ContractionStatus::pass:
      return "pass";
    case ContractionStatus::fail:
      return "fail";
    case ContractionStatus::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

ContractionReport contraction_check(const std::vector<double>& ratios,
                                    const std::vector<bool>& above_noise,
                                    const std::vector<double>& allowances) {
  if (ratios.size() != above_noise.size())
    throw ConfigError("contraction_check: ratio and flag counts differ");
  ContractionReport r;
  std::vector<double> allow;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!above_noise[i]) continue;
    r.counted.push_back(ratios[i]);
    allow.push_back(i < allowances.size() ? allowances[i] : 0.0);
  }
  r.strictly_decreasing = std::adjacent_find(r.counted.begin(), r.counted.end(),
                                             [](double a, double b) { return b >= a; }) == r.counted.end();
  r.half_factor_ok = true;
  for (std::size_t i = 0; i < r.counted.size(); ++i)
    r.half_factor_ok = r.half_factor_ok && r.counted[i] <= 0.5 + allow[i];
  const bool all_below = std::all_of(r.counted.begin(), r.counted.end(), [](double x) { return x < 1.0; });
  if (!all_below) {
    r.status = ContractionStatus::fail;
  } else if (r.counted.size() < 2) {
    r.status = ContractionStatus::inconclusive;
  } else {
    r.status = ContractionStatus::pass;
  }
  return r;
}

ContractionReport contraction_check(const BsdeSolution& solution) {
  // Ratio i compares iteration i + 2 with i + 1.
  std::vector<double> allow;
  for (std::size_t i = 0; i < solution.ratios.size(); ++i) {
    const auto& num = solution.history[i + 2];
    const auto& den = solution.history[i + 1];
    allow.push_back(den.delta_norm > 0.0 ? num.difference_floor / den.delta_norm : 0.0);
  }
  return contraction_check(solution.ratios, solution.ratio_above_noise, allow);
}

std::string diagnostics_report(const BsdeSolution& solution) {
  using nlohmann::json;
  const auto mp = max_principle_check(solution, solution.C1);
  const auto bmo = z_bmo_check(solution);
  const auto cr = contraction_check(solution);
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["max_principle"] = {{"margin", mp.margin}, {"pass", mp.pass}, {"margins", mp.margins}};
  j["z_bmo"] = {{"measured", bmo.measured.value},
                {"se", bmo.measured.se},
                {"measured_squared", bmo.measured.squared},
                {"squared_se", bmo.measured.squared_se},
                {"bound", bmo.bound},
                {"pass", bmo.pass}};
  j["contraction"] = {{"status", to_string(cr.status)},
                      {"ratios", solution.ratios},
                      {"above_noise", solution.ratio_above_noise},
                      {"counted", cr.counted},
                      {"strictly_decreasing", cr.strictly_decreasing},
                      {"half_factor_ok", cr.half_factor_ok},
                      {"converged", solution.converged},
                      {"tolerance", solution.tolerance}};
  j["alpha"] = solution.alpha;
  j["constants"] = {{"C0", solution.C0},
                    {"C1", solution.C1},
                    {"lambda1", kSpectralGap},
                    {"nu", solution.config.nu},
                    {"T", solution.config.T}};
  return j.dump(2);
}

}  // namespace vbsde

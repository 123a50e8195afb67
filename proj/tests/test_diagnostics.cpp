#include <doctest.h>

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "vbsde/biot_savart.hpp"
#include "vbsde/diagnostics.hpp"
#include "quadrature.hpp"
#include "vbsde/errors.hpp"

using namespace vbsde;
using std::numbers::pi;

TEST_CASE("tail quadrature") {
  // exact for cubics, fourth order on an exponential
  std::vector<double> cubic(9);
  for (int i = 0; i < 9; ++i) cubic[i] = std::pow(0.125 * i, 3) - 0.125 * i;
  const auto t = detail::tail_integrals(cubic, 0.125);
  for (int j = 0; j < 9; ++j) {
    const double a = 0.125 * j;
    CHECK(std::abs(t[j] - ((0.25 - 0.5) - (std::pow(a, 4) / 4 - a * a / 2))) < 1e-14);
  }
  double last = 0.0;
  for (int n : {32, 64, 128}) {
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = std::exp(-5.0 * i / n);
    const double err = std::abs(detail::tail_integrals(g, 1.0 / n)[0] - (1 - std::exp(-5.0)) / 5);
    if (last > 0) CHECK(last / err > 12.0);
    last = err;
  }
  const auto two = detail::tail_integrals({1.0, 3.0}, 0.5);
  CHECK(two[0] == 1.0);
  CHECK(two[1] == 0.0);
}

TEST_CASE("printed BMO bound") {
  CHECK(z_bmo_bound(1.0, 0.0, 1.0, 0.0) == 1.0);
  CHECK(z_bmo_bound(1.0, 123.0, 1.0, 0.0) == 1.0);
  CHECK(z_bmo_bound(2.0, 1.0, 0.5, 1.0) == doctest::Approx(4.0 * std::sqrt(4.5)));
  CHECK(z_bmo_bound(0.0, 1.0, 0.5, 1.0) == 0.0);
  double last = 0.0;
  for (double T : {0.0, 0.1, 0.5, 1.0, 4.0}) {
    const double b = z_bmo_bound(1.0, 1.013, 0.1, T);
    CHECK(b > last);
    last = b;
  }
  CHECK_THROWS_AS(z_bmo_bound(1, 1, 0, 1), ConfigError);
}

TEST_CASE("max principle detector") {
  const std::vector<IterateBound> ok{{0.9, 0.01}, {1.0, 0.0}, {1.005, 0.01}};
  const auto r = max_principle_check(ok, 1.0);
  CHECK(r.pass);
  CHECK(r.margins.size() == 3);
  CHECK(r.margin == doctest::Approx(0.0));
  const std::vector<IterateBound> bad{{0.5, 0.0}, {2.0, 0.01}};
  const auto f = max_principle_check(bad, 1.0);
  CHECK_FALSE(f.pass);
  CHECK(f.margin == doctest::Approx(-0.99));
  const std::vector<IterateBound> zero{{0.0, 0.02}};
  CHECK(max_principle_check(zero, 0.0).margin == 0.02);
}

TEST_CASE("contraction detector") {
  const auto pass = contraction_check({0.4, 0.3, 0.2}, {true, true, true});
  CHECK(pass.status == ContractionStatus::pass);
  CHECK(pass.strictly_decreasing);
  CHECK(pass.half_factor_ok);
  const auto wide = contraction_check({0.8, 0.7}, {true, true}, {0.1, 0.1});
  CHECK(wide.status == ContractionStatus::pass);
  CHECK_FALSE(wide.half_factor_ok);
  const auto diverge = contraction_check({1.5, 2.0, 3.1}, {true, true, true});
  CHECK(diverge.status == ContractionStatus::fail);
  CHECK_FALSE(diverge.strictly_decreasing);
  const auto one = contraction_check({0.4, 5.0}, {true, false});
  CHECK(one.status == ContractionStatus::inconclusive);
  CHECK(one.counted.size() == 1);
  CHECK(contraction_check({}, {}).status == ContractionStatus::inconclusive);
  CHECK(contraction_check({1.2}, {true}).status == ContractionStatus::fail);
  CHECK(to_string(ContractionStatus::inconclusive) == "inconclusive");
  CHECK_THROWS_AS(contraction_check({0.1}, {}), ConfigError);
}

TEST_CASE("BMO proxy on an exact single-mode trajectory") {
  const double nu = 0.5, T = 0.25;
  const int L = 64;
  const auto traj = evolve(ScalarField::sine(16, 1, 0), nu, T, L);
  const PicardIterate it = PicardIterate::from_trajectory(traj);
  const auto e = z_bmo_proxy(it, nu, 4, 3);
  const double exact = (1.0 - std::exp(-8 * pi * pi * nu * T)) / (4 * nu);
  CHECK(std::abs(e.squared - exact) < 1e-5 * exact);
  CHECK(e.squared_se == 0.0);
  CHECK(e.value == doctest::Approx(std::sqrt(e.squared)));
  // the Z norm is translation invariant, so alpha = 0 weighted BMO coincides
  CHECK(std::abs(std::pow(weighted_bmo(it.fields, 0.0, it.dt), 2) - e.squared) < 1e-12 * e.squared);
  CHECK(e.value < z_bmo_bound(1.0, closed_form_C0(16), nu, T));
  const auto z = z_bmo_proxy(PicardIterate::zero(ScalarField(16), 8, 0.1), nu, 2, 1);
  CHECK(z.squared == 0.0);
  CHECK_THROWS_AS(z_bmo_proxy(it, nu, 0, 1), ConfigError);
}

TEST_CASE("report of a solved fixture") {
  SolverConfig c;
  c.N = 16;
  c.L = 16;
  c.M_inner = 400;
  c.M_outer = 4;
  c.nu = 0.1;
  c.T = 0.5;
  c.picard_tol_floor_multiple = 2.0;
  const auto sol = picard_solve(ScalarField::sine(16, 1, 0), c);
  const auto mp = max_principle_check(sol, sol.C1);
  CHECK(mp.pass);
  // iterate 0 is exact and attains sup|psi| at tau = 0; later ones carry MC slack
  CHECK(mp.margins.front() == doctest::Approx(0.0).epsilon(1e-14));
  for (std::size_t i = 1; i < mp.margins.size(); ++i) CHECK(mp.margins[i] > 0.0);
  const auto bmo = z_bmo_check(sol);
  CHECK(bmo.pass);
  CHECK(bmo.measured.se > 0.0);
  const auto j = nlohmann::json::parse(diagnostics_report(sol));
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j["max_principle"]["pass"] == true);
  CHECK(j["contraction"]["converged"] == true);
  CHECK(j["constants"]["lambda1"].get<double>() == doctest::Approx(4 * pi * pi));
  CHECK(j.contains("alpha"));
}

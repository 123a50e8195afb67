#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "vbsde/biot_savart.hpp"
#include "vbsde/bsde_engine.hpp"
#include "vbsde/bundle.hpp"
#include "vbsde/errors.hpp"
#include "vbsde/spectral_oracle.hpp"

using namespace vbsde;
using std::numbers::pi;

namespace {

ScalarField two_mode(int n) { return ScalarField::sine(n, 1, 0) + ScalarField::cosine(n, 1, 1); }

SolverConfig small_config(int n, int L, int M, double nu, double T) {
  SolverConfig c;
  c.N = n;
  c.L = L;
  c.M_inner = M;
  c.M_outer = 4;
  c.nu = nu;
  c.T = T;
  c.base_seed = 11;
  return c;
}

}  // namespace

TEST_CASE("terminal_value") {
  const ScalarField psi = ScalarField::sine(16, 1, 0);
  BrownianPath p;
  p.dt = 0.5;
  p.values = {{0, 0}, {0, 0}};
  p.increments = {{0, 0}};
  CHECK(l2_norm(terminal_value(psi, p, 0.3) - psi) == 0.0);
  // sqrt(2 nu) B_T = (0.25, 0) with nu = 0.5
  p.values[1] = {0.25, 0.0};
  p.increments[0] = {0.25, 0.0};
  CHECK(l2_norm(terminal_value(psi, p, 0.5) - ScalarField::cosine(16, 1, 0)) < 1e-15);
  const ScalarField r = random_field(16, 4);
  const ScalarField xi = terminal_value(r, simulate(3, 10, 1.0), 0.2);
  CHECK(xi.modes()[0] == Complex{});
  CHECK(std::abs(l2_norm(xi) - l2_norm(r)) < 1e-13);
  BrownianPath empty;
  empty.values = {{0, 0}};
  CHECK_THROWS_AS(terminal_value(psi, empty, 0.1), ConfigError);
}

TEST_CASE("girsanov weight arithmetic") {
  const std::vector<Vec2> zero(5), dB{{0.1, -0.2}, {0.3, 0.0}, {-0.1, 0.1}, {0, 0}, {0.2, 0.2}};
  CHECK(girsanov_weight(zero, dB, 0.01) == 1.0);
  const std::vector<Vec2> h{{1.0, 0.0}}, d{{0.1, 0.0}};
  CHECK(std::abs(girsanov_weight(h, d, 0.01) - std::exp(-0.1 - 0.005)) < 1e-16);
  const std::vector<Vec2> big{{1e4, 0.0}}, neg{{-1.0, 0.0}};
  CHECK_THROWS_AS(girsanov_weight(big, neg, 1e-6), NumericalError);
  const std::vector<Vec2> nan{{std::nan(""), 0.0}};
  CHECK_THROWS_AS(girsanov_weight(nan, d, 0.01), NumericalError);
  CHECK_THROWS_AS(girsanov_weight(h, dB, 0.01), ConfigError);
}

TEST_CASE("girsanov weight has unit mean") {
  const int steps = 16;
  const double dt = 1.0 / steps;
  std::vector<Vec2> h(steps);
  for (int j = 0; j < steps; ++j) h[j] = {std::cos(j), 0.5};
  const int samples = 100000;
  double s = 0, s2 = 0;
  std::vector<Vec2> dB(steps);
  for (int i = 0; i < samples; ++i) {
    const std::uint64_t seed = derive_seed(77, 0, static_cast<std::uint64_t>(i));
    for (int j = 0; j < steps; ++j) dB[j] = std::sqrt(dt) * normal_pair(seed, j, Stream::branch);
    const double w = girsanov_weight(h, dB, dt);
    CHECK(w > 0.0);
    s += w;
    s2 += w * w;
  }
  const double mean = s / samples;
  const double se = std::sqrt((s2 / samples - mean * mean) / samples);
  CHECK(std::abs(mean - 1.0) < 3.0 * se);
}

TEST_CASE("heat reduction of the weighted estimator") {
  const int n = 16;
  const ScalarField psi = two_mode(n);
  SolverConfig c = small_config(n, 8, 2000, 0.5, 0.25);
  c.control_variate = false;
  const PicardIterate out = linear_bsde_solve(PicardIterate::zero(psi, c.L, c.dt()), psi, c);
  REQUIRE(out.stats);
  CHECK(l2_norm(out.fields[0] - psi) == 0.0);
  for (int m = 1; m <= c.L; ++m) {
    const double err = l2_norm(out.fields[m] - heat_solution(psi, c.nu, m * c.dt()));
    CHECK(err < 3.0 * out.stats->pooled_se[m]);
    CHECK(out.fields[m].modes()[0] == Complex{});
  }
  // With the control variate the drift-free map is the exact semigroup.
  c.control_variate = true;
  const PicardIterate exact = linear_bsde_solve(PicardIterate::zero(psi, c.L, c.dt()), psi, c);
  CHECK_FALSE(exact.stats);
  for (int m = 0; m <= c.L; ++m)
    CHECK(l2_norm(exact.fields[m] - heat_solution(psi, c.nu, m * c.dt())) == 0.0);
}

TEST_CASE("heat solution is mode-wise decay") {
  const ScalarField psi = two_mode(8);
  const ScalarField h = heat_solution(psi, 0.5, 0.1);
  CHECK(std::abs(h.mode(1, 0) - psi.mode(1, 0) * std::exp(-4 * pi * pi * 0.05)) < 1e-16);
  CHECK(std::abs(h.mode(1, 1) - psi.mode(1, 1) * std::exp(-8 * pi * pi * 0.05)) < 1e-16);
  CHECK_THROWS_AS(heat_solution(psi, 0.5, -1.0), DomainError);
}

TEST_CASE("single-mode trajectory is a fixed point") {
  const int n = 16;
  const ScalarField psi = ScalarField::sine(n, 1, 0);
  for (bool cv : {true, false}) {
    SolverConfig c = small_config(n, 16, 1000, 0.1, 0.5);
    c.control_variate = cv;
    const auto traj = evolve(psi, c.nu, c.T, c.L);
    const PicardIterate out = linear_bsde_solve(PicardIterate::from_trajectory(traj), psi, c);
    REQUIRE(out.stats);
    for (int m = 1; m <= c.L; ++m) CHECK(l2_norm(out.fields[m] - traj.at(m)) < 4.0 * out.stats->pooled_se[m]);
  }
}

TEST_CASE("weighted and drifted estimators agree") {
  const int n = 16;
  const ScalarField psi = two_mode(n);
  const SolverConfig c = small_config(n, 16, 1000, 0.5, 0.25);
  const auto traj = evolve(psi, c.nu, c.T, c.L);
  const PicardIterate prev = PicardIterate::from_trajectory(traj);
  const PicardIterate a = linear_bsde_solve(prev, psi, c);
  const PicardIterate b = drifted_sde_solve(prev, psi, c);
  for (int m = 1; m <= c.L; ++m) {
    const double se = std::hypot(a.stats->pooled_se[m], b.stats->pooled_se[m]);
    CHECK(l2_norm(a.fields[m] - b.fields[m]) < 4.0 * se);
  }
  // zero drift: both reduce to the heat semigroup
  SolverConfig plain = c;
  plain.control_variate = false;
  const PicardIterate z = drifted_sde_solve(PicardIterate::zero(psi, c.L, c.dt()), psi, plain);
  for (int m = 1; m <= c.L; ++m)
    CHECK(l2_norm(z.fields[m] - heat_solution(psi, c.nu, m * c.dt())) < 4.0 * z.stats->pooled_se[m]);
}

TEST_CASE("estimates do not depend on the worker count") {
  const int n = 16;
  const ScalarField psi = two_mode(n);
  SolverConfig c = small_config(n, 8, 100, 0.5, 0.25);
  const PicardIterate prev = PicardIterate::from_trajectory(evolve(psi, c.nu, c.T, c.L));
  const PicardIterate a = linear_bsde_solve(prev, psi, c);
  c.workers = 3;
  const PicardIterate b = linear_bsde_solve(prev, psi, c);
  for (int m = 0; m <= c.L; ++m)
    for (std::size_t i = 0; i < a.fields[m].modes().size(); ++i) CHECK(a.fields[m].modes()[i] == b.fields[m].modes()[i]);
  CHECK(a.stats->pooled_se == b.stats->pooled_se);
}

TEST_CASE("drift guard and weight overflow fail loudly") {
  const int n = 16;
  const ScalarField psi = two_mode(n);
  SolverConfig c = small_config(n, 2, 10, 0.01, 1.0);
  PicardIterate prev = PicardIterate::zero(psi, c.L, c.dt());
  for (auto& f : prev.fields) f = 50.0 * psi;
  CHECK_THROWS_AS(linear_bsde_solve(prev, psi, c), NumericalError);
}

TEST_CASE("extract_Z") {
  const int n = 16;
  PicardIterate zero = PicardIterate::zero(ScalarField(n), 4, 0.1);
  for (const auto& z : extract_Z(zero)) {
    CHECK(z.c1.is_zero());
    CHECK(z.c2.is_zero());
  }
  const auto traj = evolve(ScalarField::sine(n, 1, 0), 0.1, 0.5, 8);
  const auto Z = extract_Z(PicardIterate::from_trajectory(traj));
  for (int m = 0; m <= 8; ++m) {
    const double a = -2.0 * traj.at(m).mode(1, 0).imag();
    CHECK(l2_norm(Z[m].c1 - ScalarField::cosine(n, 1, 0, 2 * pi * a)) < 1e-13);
    CHECK(Z[m].c2.is_zero());
  }
  const PicardIterate r = PicardIterate::from_trajectory(evolve(random_field(n, 5, 2.0), 0.2, 0.1, 4));
  for (const auto& z : extract_Z(r))
    CHECK(l2_norm(partial_derivative(z.c1, Axis::x2) - partial_derivative(z.c2, Axis::x1)) < 1e-12);
}

TEST_CASE("alpha selection satisfies both weight conditions") {
  for (double C0 : {0.3, 1.0, 1.013}) {
    for (double C1 : {0.5, 1.0, 2.0}) {
      for (double nu : {0.1, 0.5, 2.0}) {
        for (double T : {0.0, 0.25, 1.0}) {
          const double a = select_alpha(C0, C1, nu, T);
          const double k = C0 * C0 * C1 * C1;
          CHECK(k * (nu + T * C0 * C1 * C1) / (a * nu * nu) <= 1.0 / 16 * (1 + 1e-14));
          CHECK(k / a <= nu / 4 * (1 + 1e-14));
        }
      }
    }
  }
  CHECK_THROWS_AS(select_alpha(1, 1, 0, 1), ConfigError);
}

TEST_CASE("weighted norms") {
  const int n = 16;
  const auto traj = evolve(ScalarField::sine(n, 1, 0), 0.1, 0.5, 8);
  const auto& f = traj.fields();
  CHECK(weighted_sup(f, 0.0, traj.dt()) == sup_norm(f[0]));
  CHECK(weighted_sup(f, 3.0, traj.dt()) == sup_norm(f[0]));
  std::vector<ScalarField> late(f.begin(), f.end());
  late[0] = ScalarField(n);
  CHECK(std::abs(weighted_sup(late, 2.0, traj.dt()) - std::exp(-2.0 * traj.dt()) * sup_norm(f[1])) < 1e-15);
  // constant field: the quadrature is exact
  std::vector<ScalarField> c(5, ScalarField::sine(n, 1, 0));
  CHECK(std::abs(weighted_bmo(c, 0.0, 0.25) - std::sqrt(2 * pi * pi)) < 1e-12);
  CHECK(weighted_bmo(c, 5.0, 0.25) < weighted_bmo(c, 0.0, 0.25));
}

TEST_CASE("picard_solve") {
  const int n = 16;
  SUBCASE("zero terminal data") {
    const auto sol = picard_solve(ScalarField(n), small_config(n, 8, 50, 0.1, 0.5));
    CHECK(sol.converged);
    for (const auto& f : sol.Y.fields) CHECK(f.is_zero());
    for (const auto& z : sol.Z_fields) CHECK(z.c1.is_zero());
  }
  SUBCASE("single mode converges immediately") {
    SolverConfig c = small_config(n, 16, 400, 0.1, 0.5);
    c.picard_tol_floor_multiple = 2.0;
    const auto sol = picard_solve(ScalarField::sine(n, 1, 0), c);
    CHECK(sol.converged);
    CHECK(sol.history.size() <= 3);
    CHECK(sol.alpha == doctest::Approx(select_alpha(closed_form_C0(n), 1.0, 0.1, 0.5)));
  }
  SUBCASE("noise floor above an absolute tolerance") {
    SolverConfig c = small_config(n, 8, 2, 0.5, 0.25);
    c.picard_tol = 1e-12;
    CHECK_THROWS_AS(picard_solve(two_mode(n), c), ConfigError);
  }
  SUBCASE("non-convergence carries the ratio history") {
    SolverConfig c = small_config(n, 8, 50, 0.5, 0.25);
    c.alpha = 0.0;
    c.picard_tol = 1.0;
    c.picard_tol_floor_multiple = 1e-9;
    c.max_iter = 3;
    try {
      picard_solve(two_mode(n), c);
      FAIL("expected non-convergence");
    } catch (const ConvergenceError& e) {
      CHECK(e.ratios().size() == 2);
    }
  }
  SUBCASE("invalid input") {
    std::vector<Complex> m(n * n);
    m[0] = 1.0;
    CHECK_THROWS_AS(picard_solve(ScalarField::from_modes(n, m, false), small_config(n, 8, 10, 0.1, 0.5)),
                    DomainError);
    CHECK_THROWS_AS(picard_solve(ScalarField(8), small_config(n, 8, 10, 0.1, 0.5)), ConfigError);
  }
}

TEST_CASE("config validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto edit) {
    SolverConfig x;
    edit(x);
    CHECK_THROWS_AS(x.validate(), ConfigError);
  };
  bad([](SolverConfig& x) { x.N = 7; });
  bad([](SolverConfig& x) { x.L = 0; });
  bad([](SolverConfig& x) { x.M_outer = 0; });
  bad([](SolverConfig& x) { x.M_inner = 1; });
  bad([](SolverConfig& x) { x.nu = 0; });
  bad([](SolverConfig& x) { x.T = -1; });
  bad([](SolverConfig& x) { x.alpha = -1.0; });
  bad([](SolverConfig& x) { x.picard_tol = 0; });
  bad([](SolverConfig& x) { x.max_iter = 0; });
  bad([](SolverConfig& x) { x.workers = 0; });
}

TEST_CASE("pathwise residual") {
  const int n = 16;
  const ScalarField psi = ScalarField::sine(n, 1, 0);
  const auto traj = evolve(psi, 0.1, 0.5, 32);
  const PicardIterate Y = PicardIterate::from_trajectory(traj);
  const BrownianPath path = simulate(9, 32, 0.5);
  const auto prof = bsde_residual_profile(Y, psi, path, 0.1);
  CHECK(prof.size() == 33);
  CHECK(prof.back() == 0.0);
  for (double r : prof) CHECK(std::isfinite(r));
  const PicardIterate z = PicardIterate::zero(ScalarField(n), 32, traj.dt());
  for (double r : bsde_residual_profile(z, ScalarField(n), path, 0.1)) CHECK(r == 0.0);
  CHECK_THROWS_AS(bsde_residual_profile(Y, psi, simulate(9, 16, 0.5), 0.1), ConfigError);
}

TEST_CASE("solution bundle round trip") {
  const int n = 16;
  SolverConfig c = small_config(n, 8, 60, 0.5, 0.25);
  c.picard_tol_floor_multiple = 2.0;
  const auto sol = picard_solve(two_mode(n), c);
  const auto dir = std::filesystem::temp_directory_path() / "vbsde_bundle_roundtrip";
  std::filesystem::remove_all(dir);
  const auto files = save_bundle(dir, sol);
  CHECK(files.size() == 4);
  const BsdeSolution back = load_bundle(dir);
  CHECK(back.alpha == sol.alpha);
  CHECK(back.C0 == sol.C0);
  CHECK(back.config.M_inner == 60);
  CHECK(back.config.picard_tol_floor_multiple == 2.0);
  CHECK(back.ratios == sol.ratios);
  CHECK(back.ratio_above_noise == sol.ratio_above_noise);
  REQUIRE(back.history.size() == sol.history.size());
  CHECK(back.history.back().difference_floor == sol.history.back().difference_floor);
  for (int m = 0; m <= c.L; ++m)
    for (std::size_t i = 0; i < back.Y.fields[m].modes().size(); ++i)
      CHECK(back.Y.fields[m].modes()[i] == sol.Y.fields[m].modes()[i]);
  REQUIRE(back.Y.stats);
  CHECK(back.Y.stats->pooled_se == sol.Y.stats->pooled_se);
  CHECK(back.Y.stats->batch_means == sol.Y.stats->batch_means);
  CHECK(solution_json(back) == solution_json(sol));
  std::filesystem::remove(dir / "Y.vbtr");
  CHECK_THROWS_AS(load_bundle(dir), ConfigError);
  CHECK_THROWS_AS(load_bundle(dir / "nowhere"), ConfigError);
}

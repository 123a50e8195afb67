#include "vbsde/biot_savart.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vbsde/errors.hpp"

namespace vbsde {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_mean_zero(const ScalarField& f, const char* op) {
  const double scale = std::max(sobolev_norm(f, 0), 1.0);
  if (std::abs(f.modes()[0]) > 1e-12 * scale)
    throw DomainError(std::string(op) + ": input must have zero mean");
}

// Sum over multi-indices 0 <= a1 + a2 <= order of s1^(2 a1) s2^(2 a2).
double sobolev_weight(double s1, double s2, int order) {
  double w = 0.0;
  for (int a1 = 0; a1 <= order; ++a1)
    for (int a2 = 0; a1 + a2 <= order; ++a2) w += std::pow(s1 * s1, a1) * std::pow(s2 * s2, a2);
  return w;
}

}  // namespace

ScalarField green_solve(const ScalarField& f) {
  require_mean_zero(f, "green_solve");
  const int n = f.grid_size();
  const int h = n / 2;
  std::vector<Complex> out(f.modes().begin(), f.modes().end());
  for (int i1 = 0; i1 < n; ++i1) {
    const int k1 = ScalarField::wavenumber_of(i1, n);
    for (int i2 = 0; i2 < n; ++i2) {
      const int k2 = ScalarField::wavenumber_of(i2, n);
      auto& c = out[static_cast<std::size_t>(i1) * n + i2];
      if ((k1 == 0 && k2 == 0) || i1 == h || i2 == h) {
        c = 0.0;
        continue;
      }
      c /= kSpectralGap * (k1 * k1 + k2 * k2);
    }
  }
  return FieldAccess::make(n, true, std::move(out));
}

VectorField apply_K(const ScalarField& omega) {
  require_mean_zero(omega, "apply_K");
  const int n = omega.grid_size();
  const int h = n / 2;
  const auto w = omega.modes();
  std::vector<Complex> u1(w.size()), u2(w.size());
  for (int i1 = 0; i1 < n; ++i1) {
    const int k1 = ScalarField::wavenumber_of(i1, n);
    for (int i2 = 0; i2 < n; ++i2) {
      const int k2 = ScalarField::wavenumber_of(i2, n);
      if ((k1 == 0 && k2 == 0) || i1 == h || i2 == h) continue;
      const std::size_t idx = static_cast<std::size_t>(i1) * n + i2;
      const double denom = kTwoPi * (k1 * k1 + k2 * k2);
      u1[idx] = Complex(0.0, k2 / denom) * w[idx];
      u2[idx] = Complex(0.0, -k1 / denom) * w[idx];
    }
  }
  return {FieldAccess::make(n, true, std::move(u1)), FieldAccess::make(n, true, std::move(u2))};
}

ScalarField curl(const VectorField& u) {
  return partial_derivative(u.c2, Axis::x1) - partial_derivative(u.c1, Axis::x2);
}

ScalarField divergence(const VectorField& u) {
  return partial_derivative(u.c1, Axis::x1) + partial_derivative(u.c2, Axis::x2);
}

EllipticReport verify_elliptic_estimates(const ScalarField& f) {
  require_mean_zero(f, "verify_elliptic_estimates");
  const double norm = l2_norm(f);
  if (norm == 0.0) throw DomainError("verify_elliptic_estimates: zero field");
  const VectorField u = apply_K(f);
  EllipticReport r;
  const ScalarField* parts[] = {&u.c1, &u.c2};
  // Strict comparisons would fail on saturating modes by rounding alone.
  constexpr double slack = 1.0 + 1e-12;
  r.grad_bound_ok = true;
  r.poincare_ok = true;
  for (int j = 0; j < 2; ++j) {
    const VectorField g = gradient(*parts[j]);
    const double grad = std::sqrt(std::pow(l2_norm(g.c1), 2) + std::pow(l2_norm(g.c2), 2));
    r.grad_ratios[j] = grad / norm;
    r.poincare_ratios[j] = l2_norm(*parts[j]) / norm;
    r.grad_bound_ok = r.grad_bound_ok && r.grad_ratios[j] <= slack;
    r.poincare_ok = r.poincare_ok && r.poincare_ratios[j] <= slack / std::sqrt(kSpectralGap);
  }
  return r;
}

double elliptic_ratio(const ScalarField& f, int order) {
  if (order < 1 || order > 3) throw ConfigError("elliptic order must lie in [1, 3]");
  const double denom = sobolev_norm(f, order - 1);
  if (denom == 0.0) throw DomainError("elliptic_ratio: zero field");
  const VectorField u = apply_K(f);
  return std::max(sobolev_norm(u.c1, order), sobolev_norm(u.c2, order)) / denom;
}

double measure_C0(int order, int trials, int n, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("measure_C0 needs at least one trial");
  if (order < 1 || order > 3) throw ConfigError("elliptic order must lie in [1, 3]");
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ScalarField f = random_field(n, seed + static_cast<std::uint64_t>(t), t % 2 == 0 ? 0.0 : 2.0);
    best = std::max(best, elliptic_ratio(f, order));
  }
  return best;
}

double closed_form_C0(int order, int n) {
  if (order < 1 || order > 3) throw ConfigError("elliptic order must lie in [1, 3]");
  validate_grid_size(n);
  const int h = n / 2;
  double best = 0.0;
  for (int k1 = -h + 1; k1 < h; ++k1) {
    for (int k2 = -h + 1; k2 < h; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      const double s1 = kTwoPi * k1;
      const double s2 = kTwoPi * k2;
      const double base = sobolev_weight(s1, s2, order) / sobolev_weight(s1, s2, order - 1);
      const double k2sum = k1 * k1 + k2 * k2;
      // |multiplier_j|^2 = k_other^2 / (2 pi |k|^2)^2
      const double m = std::max(k1 * k1, k2 * k2) / (kTwoPi * kTwoPi * k2sum * k2sum);
      best = std::max(best, std::sqrt(m * base));
    }
  }
  return best;
}

double closed_form_C0(int n) {
  double best = 0.0;
  for (int order = 1; order <= 3; ++order) best = std::max(best, closed_form_C0(order, n));
  return best;
}

}  // namespace vbsde

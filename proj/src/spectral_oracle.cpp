#include "vbsde/spectral_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "vbsde/biot_savart.hpp"
#include "vbsde/errors.hpp"

namespace vbsde {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kCfl = 0.5;

std::size_t flat(int i1, int i2, int n) { return static_cast<std::size_t>(i1) * n + i2; }

// Zero-pads an n-grid spectrum (Nyquist dropped) to m >= n and returns
// physical samples.
std::vector<double> to_padded_grid(const ScalarField& f, int m) {
  const int n = f.grid_size();
  const int h = n / 2;
  std::vector<Complex> big(static_cast<std::size_t>(m) * m);
  const auto modes = f.modes();
  for (int i1 = 0; i1 < n; ++i1) {
    if (i1 == h) continue;
    const int t1 = ScalarField::index_of(ScalarField::wavenumber_of(i1, n), m);
    for (int i2 = 0; i2 < n; ++i2) {
      if (i2 == h) continue;
      const int t2 = ScalarField::index_of(ScalarField::wavenumber_of(i2, n), m);
      big[flat(t1, t2, m)] = modes[flat(i1, i2, n)];
    }
  }
  detail::fft2d(big, m, detail::FftDirection::backward);
  std::vector<double> out(big.size());
  std::transform(big.begin(), big.end(), out.begin(), [](Complex c) { return c.real(); });
  return out;
}

ScalarField rk_rhs(const ScalarField& omega) { return -1.0 * nonlinear_term(omega); }

}  // namespace

ScalarField nonlinear_term(const ScalarField& omega) {
  const int n = omega.grid_size();
  if (omega.is_zero()) return ScalarField(n, true);
  const int m = 3 * n / 2 + (3 * n / 2) % 2;
  const VectorField u = apply_K(omega);
  const VectorField g = gradient(omega);
  const auto u1 = to_padded_grid(u.c1, m);
  const auto u2 = to_padded_grid(u.c2, m);
  const auto g1 = to_padded_grid(g.c1, m);
  const auto g2 = to_padded_grid(g.c2, m);
  std::vector<Complex> prod(u1.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = u1[i] * g1[i] + u2[i] * g2[i];
  detail::fft2d(prod, m, detail::FftDirection::forward);
  const double scale = 1.0 / (static_cast<double>(m) * m);
  const int h = n / 2;
  std::vector<Complex> out(static_cast<std::size_t>(n) * n);
  for (int i1 = 0; i1 < n; ++i1) {
    if (i1 == h) continue;
    const int s1 = ScalarField::index_of(ScalarField::wavenumber_of(i1, n), m);
    for (int i2 = 0; i2 < n; ++i2) {
      if (i2 == h) continue;
      const int s2 = ScalarField::index_of(ScalarField::wavenumber_of(i2, n), m);
      out[flat(i1, i2, n)] = prod[flat(s1, s2, m)] * scale;
    }
  }
  // The k = 0 mode of u . grad(omega) vanishes analytically; drop rounding.
  out[0] = 0.0;
  // Enforce exact conjugate symmetry lost to rounding in the padded product.
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      const std::size_t a = flat(i1, i2, n);
      const std::size_t b = flat((n - i1) % n, (n - i2) % n, n);
      if (b <= a) continue;
      const Complex avg = 0.5 * (out[a] + std::conj(out[b]));
      out[a] = avg;
      out[b] = std::conj(avg);
    }
  }
  return FieldAccess::make(n, true, std::move(out));
}

double max_velocity(const ScalarField& omega) {
  if (omega.is_zero()) return 0.0;
  const VectorField u = apply_K(omega);
  const GridSignal a = inverse_transform(u.c1);
  const GridSignal b = inverse_transform(u.c2);
  double best = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    best = std::max(best, std::hypot(a.values()[i], b.values()[i]));
  return best;
}

VorticityTrajectory::VorticityTrajectory(std::vector<ScalarField> fields, double nu, double dt)
    : fields_(std::move(fields)), nu_(nu), dt_(dt) {
  if (fields_.empty()) throw ConfigError("trajectory needs at least one field");
  if (!(dt_ > 0.0) && fields_.size() > 1) throw ConfigError("trajectory time step must be positive");
  for (const auto& f : fields_) {
    if (f.grid_size() != fields_.front().grid_size())
      throw ConfigError("trajectory fields must share a grid size");
    if (f.modes()[0] != Complex{}) throw DomainError("trajectory fields must be mean-zero");
  }
}

VorticityTrajectory VorticityTrajectory::from_data(TrajectoryData data) {
  return VorticityTrajectory(std::move(data.fields), data.nu, data.dt);
}

double VorticityTrajectory::evaluate(double tau, Vec2 x) const {
  const double T = horizon();
  if (!(tau >= 0.0) || tau > T * (1.0 + 1e-12))
    throw DomainError("evaluate: tau outside [0, " + std::to_string(T) + "]");
  if (steps() == 0) return vbsde::evaluate(fields_.front(), x);
  const double s = std::min(tau / dt_, static_cast<double>(steps()));
  const int m = std::min(static_cast<int>(std::floor(s)), steps() - 1);
  const double w = s - m;
  const double a = vbsde::evaluate(fields_[m], x);
  if (w == 0.0) return a;
  return (1.0 - w) * a + w * vbsde::evaluate(fields_[m + 1], x);
}

VorticityTrajectory evolve(const ScalarField& omega0, double nu, double T, int steps) {
  if (!(nu > 0.0)) throw ConfigError("nu must be positive");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (steps < 1) throw ConfigError("evolve needs at least one step");
  if (std::abs(omega0.modes()[0]) > 0.0) throw DomainError("initial vorticity must be mean-zero");
  const int n = omega0.grid_size();
  const int h = n / 2;
  const double dt = T / steps;

  std::vector<double> decay(static_cast<std::size_t>(n) * n);
  for (int i1 = 0; i1 < n; ++i1) {
    const int k1 = ScalarField::wavenumber_of(i1, n);
    for (int i2 = 0; i2 < n; ++i2) {
      const int k2 = ScalarField::wavenumber_of(i2, n);
      decay[flat(i1, i2, n)] = std::exp(-kSpectralGap * nu * (k1 * k1 + k2 * k2) * dt);
    }
  }
  auto damp = [&](ScalarField f) {
    auto& m = FieldAccess::modes(f);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] *= decay[i];
    return f;
  };
  auto check_cfl = [&](const ScalarField& w) {
    const double umax = max_velocity(w);
    const double c = dt * umax * kTwoPi * h;
    if (c > kCfl) {
      const int suggested = static_cast<int>(std::ceil(T * umax * kTwoPi * h / kCfl));
      throw ConfigError("advective CFL number " + std::to_string(c) + " exceeds " +
                        std::to_string(kCfl) + "; use at least L = " + std::to_string(suggested));
    }
  };

  std::vector<ScalarField> fields;
  fields.reserve(static_cast<std::size_t>(steps) + 1);
  fields.push_back(omega0.projected_mean_zero());
  for (int s = 0; s < steps; ++s) {
    const ScalarField& a = fields.back();
    check_cfl(a);
    const ScalarField k1 = rk_rhs(a);
    const ScalarField b = damp(a + dt * k1);
    const ScalarField k2 = rk_rhs(b);
    ScalarField next = damp(a + 0.5 * dt * k1) + 0.5 * dt * k2;
    for (const Complex& c : next.modes()) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw NumericalError("spectral oracle produced a non-finite coefficient at step " +
                             std::to_string(s + 1));
    }
    fields.push_back(std::move(next));
  }
  return VorticityTrajectory(std::move(fields), nu, dt);
}

}  // namespace vbsde

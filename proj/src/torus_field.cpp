#include "vbsde/torus_field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "fft.hpp"
#include "vbsde/errors.hpp"

namespace vbsde {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t flat(int i1, int i2, int n) { return static_cast<std::size_t>(i1) * n + i2; }

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (a.grid_size() != b.grid_size())
    throw ConfigError("grid size mismatch: " + std::to_string(a.grid_size()) + " vs " +
                      std::to_string(b.grid_size()));
}

// Enforce fhat[-i] = conj(fhat[i]) exactly by averaging each pair.
void symmetrize(std::vector<Complex>& m, int n) {
  for (int i1 = 0; i1 < n; ++i1) {
    const int j1 = (n - i1) % n;
    for (int i2 = 0; i2 < n; ++i2) {
      const int j2 = (n - i2) % n;
      const std::size_t a = flat(i1, i2, n);
      const std::size_t b = flat(j1, j2, n);
      if (b < a) continue;
      const Complex avg = 0.5 * (m[a] + std::conj(m[b]));
      m[a] = avg;
      m[b] = std::conj(avg);
    }
  }
}

}  // namespace

void validate_grid_size(int n) {
  if (n < 4 || n % 2 != 0)
    throw ConfigError("grid size must be even and >= 4, got " + std::to_string(n));
  if (n > 65535) throw ConfigError("grid size exceeds 65535");
}

// ---------------------------------------------------------------------------
// GridSignal

GridSignal::GridSignal(int n) : n_(n), values_(static_cast<std::size_t>(n) * n, 0.0) {
  validate_grid_size(n);
}

GridSignal::GridSignal(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  validate_grid_size(n);
  if (values_.size() != static_cast<std::size_t>(n) * n)
    throw ConfigError("grid signal needs N*N samples");
}

double GridSignal::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField(int n, bool mean_zero)
    : n_(n), mean_zero_(mean_zero), modes_(static_cast<std::size_t>(n) * n) {
  validate_grid_size(n);
}

ScalarField::ScalarField(int n, bool mean_zero, std::vector<Complex> modes)
    : n_(n), mean_zero_(mean_zero), modes_(std::move(modes)) {}

ScalarField ScalarField::from_modes(int n, std::vector<Complex> modes, bool mean_zero) {
  validate_grid_size(n);
  if (modes.size() != static_cast<std::size_t>(n) * n)
    throw ConfigError("mode array needs N*N coefficients");
  double scale = 0.0;
  for (const auto& c : modes) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw DomainError("non-finite Fourier coefficient");
    scale = std::max(scale, std::abs(c));
  }
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      const Complex a = modes[flat(i1, i2, n)];
      const Complex b = modes[flat((n - i1) % n, (n - i2) % n, n)];
      if (std::abs(a - std::conj(b)) > 1e-10 * std::max(scale, 1e-300))
        throw DomainError("coefficients are not Hermitian-symmetric (field is not real)");
    }
  }
  symmetrize(modes, n);
  if (mean_zero) {
    if (std::abs(modes[0]) > 1e-12 * std::max(scale, 1.0))
      throw DomainError("field declared mean-zero has nonzero k = 0 coefficient");
    modes[0] = 0.0;
  }
  return ScalarField(n, mean_zero, std::move(modes));
}

ScalarField ScalarField::sine(int n, int k1, int k2, double amplitude) {
  ScalarField f(n, true);
  if (k1 == 0 && k2 == 0) return f;
  if (std::abs(k1) >= n / 2 || std::abs(k2) >= n / 2)
    throw DomainError("mode (" + std::to_string(k1) + "," + std::to_string(k2) +
                      ") is not resolved on grid " + std::to_string(n));
  // sin(theta) = (e^{i theta} - e^{-i theta}) / (2i)
  f.modes_[flat(index_of(k1, n), index_of(k2, n), n)] += Complex(0.0, -0.5 * amplitude);
  f.modes_[flat(index_of(-k1, n), index_of(-k2, n), n)] += Complex(0.0, 0.5 * amplitude);
  return f;
}

ScalarField ScalarField::cosine(int n, int k1, int k2, double amplitude) {
  if (k1 == 0 && k2 == 0) throw DomainError("constant mode is not mean-zero");
  ScalarField f(n, true);
  if (std::abs(k1) >= n / 2 || std::abs(k2) >= n / 2)
    throw DomainError("mode (" + std::to_string(k1) + "," + std::to_string(k2) +
                      ") is not resolved on grid " + std::to_string(n));
  f.modes_[flat(index_of(k1, n), index_of(k2, n), n)] += 0.5 * amplitude;
  f.modes_[flat(index_of(-k1, n), index_of(-k2, n), n)] += 0.5 * amplitude;
  return f;
}

Complex ScalarField::mode(int k1, int k2) const {
  if (std::abs(k1) > n_ / 2 || std::abs(k2) > n_ / 2)
    throw DomainError("wavenumber outside the resolved range");
  return modes_[flat(index_of(k1, n_), index_of(k2, n_), n_)];
}

ScalarField ScalarField::projected_mean_zero() const {
  ScalarField out = *this;
  out.modes_[0] = 0.0;
  out.mean_zero_ = true;
  return out;
}

bool ScalarField::is_zero() const noexcept {
  return std::all_of(modes_.begin(), modes_.end(), [](Complex c) { return c == Complex{}; });
}

bool ScalarField::has_nyquist_content() const noexcept {
  const int h = n_ / 2;
  for (int i = 0; i < n_; ++i) {
    if (modes_[flat(h, i, n_)] != Complex{} || modes_[flat(i, h, n_)] != Complex{}) return true;
  }
  return false;
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < modes_.size(); ++i) modes_[i] += other.modes_[i];
  mean_zero_ = mean_zero_ && other.mean_zero_;
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < modes_.size(); ++i) modes_[i] -= other.modes_[i];
  mean_zero_ = mean_zero_ && other.mean_zero_;
  return *this;
}

ScalarField& ScalarField::operator*=(double c) {
  for (auto& m : modes_) m *= c;
  return *this;
}

// ---------------------------------------------------------------------------
// Transforms

ScalarField forward_transform(const GridSignal& g) {
  const int n = g.grid_size();
  std::vector<Complex> data(g.values().begin(), g.values().end());
  detail::fft2d(data, n, detail::FftDirection::forward);
  const double scale = 1.0 / (static_cast<double>(n) * n);
  for (auto& c : data) c *= scale;
  symmetrize(data, n);
  return FieldAccess::make(n, false, std::move(data));
}

GridSignal inverse_transform(const ScalarField& f) {
  const int n = f.grid_size();
  std::vector<Complex> data(f.modes().begin(), f.modes().end());
  detail::fft2d(data, n, detail::FftDirection::backward);
  std::vector<double> values(data.size());
  std::transform(data.begin(), data.end(), values.begin(), [](Complex c) { return c.real(); });
  return GridSignal(n, std::move(values));
}

GridSignal upsample(const ScalarField& f, int factor) {
  if (factor < 1) throw ConfigError("upsampling factor must be >= 1");
  if (factor == 1) return inverse_transform(f);
  const int n = f.grid_size();
  const int m = n * factor;
  const int h = n / 2;
  std::vector<Complex> big(static_cast<std::size_t>(m) * m);
  auto targets = [&](int i) {
    const int k = ScalarField::wavenumber_of(i, n);
    // Nyquist coefficients split evenly between +N/2 and -N/2.
    if (i == h) return std::pair{std::array{ScalarField::index_of(h, m), ScalarField::index_of(-h, m)}, 2};
    return std::pair{std::array{ScalarField::index_of(k, m), 0}, 1};
  };
  const auto modes = f.modes();
  for (int i1 = 0; i1 < n; ++i1) {
    const auto [t1, c1] = targets(i1);
    for (int i2 = 0; i2 < n; ++i2) {
      const auto [t2, c2] = targets(i2);
      const Complex v = modes[flat(i1, i2, n)] / static_cast<double>(c1 * c2);
      for (int a = 0; a < c1; ++a)
        for (int b = 0; b < c2; ++b) big[flat(t1[a], t2[b], m)] += v;
    }
  }
  detail::fft2d(big, m, detail::FftDirection::backward);
  std::vector<double> values(big.size());
  std::transform(big.begin(), big.end(), values.begin(), [](Complex c) { return c.real(); });
  return GridSignal(m, std::move(values));
}

// ---------------------------------------------------------------------------
// Multipliers

ScalarField partial_derivative(const ScalarField& f, Axis axis) {
  const int n = f.grid_size();
  const int h = n / 2;
  std::vector<Complex> out(f.modes().begin(), f.modes().end());
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      auto& c = out[flat(i1, i2, n)];
      if (i1 == h || i2 == h) {
        c = 0.0;
        continue;
      }
      const int k = ScalarField::wavenumber_of(axis == Axis::x1 ? i1 : i2, n);
      c *= Complex(0.0, kTwoPi * k);
    }
  }
  out[0] = 0.0;
  return FieldAccess::make(n, true, std::move(out));
}

VectorField gradient(const ScalarField& f) {
  return {partial_derivative(f, Axis::x1), partial_derivative(f, Axis::x2)};
}

ScalarField translate(const ScalarField& f, Vec2 a) {
  const int n = f.grid_size();
  const int h = n / 2;
  const double a1 = a.x1 - std::floor(a.x1);
  const double a2 = a.x2 - std::floor(a.x2);
  std::vector<Complex> p1(n), p2(n);
  for (int i = 0; i < n; ++i) {
    const int k = ScalarField::wavenumber_of(i, n);
    p1[i] = std::polar(1.0, kTwoPi * k * a1);
    p2[i] = std::polar(1.0, kTwoPi * k * a2);
  }
  std::vector<Complex> out(f.modes().begin(), f.modes().end());
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      auto& c = out[flat(i1, i2, n)];
      if (i1 == h || i2 == h) {
        c = 0.0;
        continue;
      }
      c *= p1[i1] * p2[i2];
    }
  }
  return FieldAccess::make(n, f.mean_zero(), std::move(out));
}

// ---------------------------------------------------------------------------
// Norms

double sobolev_norm(const ScalarField& f, int order) {
  if (order < 0 || order > 4)
    throw ConfigError("Sobolev order must lie in [0, 4], got " + std::to_string(order));
  const int n = f.grid_size();
  const int h = n / 2;
  const auto modes = f.modes();
  double total = 0.0;
  for (int i1 = 0; i1 < n; ++i1) {
    const double s1 = kTwoPi * ScalarField::wavenumber_of(i1, n);
    for (int i2 = 0; i2 < n; ++i2) {
      const double power = std::norm(modes[flat(i1, i2, n)]);
      if (power == 0.0) continue;
      double weight = 1.0;
      if (order > 0 && i1 != h && i2 != h) {
        const double s2 = kTwoPi * ScalarField::wavenumber_of(i2, n);
        // sum over a1 + a2 <= order, 1 <= a1 + a2, of s1^(2 a1) s2^(2 a2)
        for (int a1 = 0; a1 <= order; ++a1) {
          for (int a2 = 0; a1 + a2 <= order; ++a2) {
            if (a1 + a2 == 0) continue;
            weight += std::pow(s1 * s1, a1) * std::pow(s2 * s2, a2);
          }
        }
      }
      total += weight * power;
    }
  }
  return std::sqrt(total);
}

double sup_norm(const ScalarField& f) {
  if (f.is_zero()) return 0.0;
  return upsample(f, 4).max_abs();
}

double evaluate(const ScalarField& f, Vec2 x) {
  const int n = f.grid_size();
  const int h = n / 2;
  std::vector<Complex> b1(n), b2(n);
  for (int i = 0; i < n; ++i) {
    const int k = ScalarField::wavenumber_of(i, n);
    if (i == h) {
      b1[i] = std::cos(kTwoPi * k * x.x1);
      b2[i] = std::cos(kTwoPi * k * x.x2);
    } else {
      b1[i] = std::polar(1.0, kTwoPi * k * x.x1);
      b2[i] = std::polar(1.0, kTwoPi * k * x.x2);
    }
  }
  const auto modes = f.modes();
  Complex total = 0.0;
  for (int i1 = 0; i1 < n; ++i1) {
    Complex row = 0.0;
    for (int i2 = 0; i2 < n; ++i2) row += modes[flat(i1, i2, n)] * b2[i2];
    total += row * b1[i1];
  }
  return total.real();
}

double inner_product(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f, g);
  double total = 0.0;
  const auto a = f.modes();
  const auto b = g.modes();
  for (std::size_t i = 0; i < a.size(); ++i) total += (a[i] * std::conj(b[i])).real();
  return total;
}

ScalarField random_field(int n, std::uint64_t seed, double decay) {
  validate_grid_size(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Complex> modes(static_cast<std::size_t>(n) * n);
  const int h = n / 2;
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) {
      if (i1 == h || i2 == h) continue;
      const int k1 = ScalarField::wavenumber_of(i1, n);
      const int k2 = ScalarField::wavenumber_of(i2, n);
      if (k1 == 0 && k2 == 0) continue;
      const double scale = std::pow(1.0 + k1 * k1 + k2 * k2, -0.5 * decay);
      const double re = normal(rng);
      const double im = normal(rng);
      modes[flat(i1, i2, n)] = scale * Complex(re, im);
    }
  }
  symmetrize(modes, n);
  modes[0] = 0.0;
  return FieldAccess::make(n, true, std::move(modes));
}

}  // namespace vbsde

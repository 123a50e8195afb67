#pragma once

// Independent reference computations used as test oracles. Everything here
// is written directly from the defining sums, with no FFTs and no code
// shared with the library.

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// fhat(k) = N^-2 sum_j g(j/N) exp(-2 pi i <k, j/N>) by direct O(N^4) loops,
// indexed by signed wavenumber through ((k % N) + N) % N.
inline std::vector<std::complex<double>> dft(const std::vector<double>& g, int n) {
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      std::complex<double> s = 0.0;
      for (int j1 = 0; j1 < n; ++j1)
        for (int j2 = 0; j2 < n; ++j2)
          s += g[static_cast<std::size_t>(j1) * n + j2] *
               std::polar(1.0, -kTwoPi * (static_cast<double>(a) * j1 + static_cast<double>(b) * j2) / n);
      out[static_cast<std::size_t>(a) * n + b] = s / static_cast<double>(n * n);
    }
  }
  return out;
}

// g(j/N) = sum_k fhat(k) exp(2 pi i <k, j/N>), real part.
inline std::vector<double> series(const std::vector<std::complex<double>>& f, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int j1 = 0; j1 < n; ++j1) {
    for (int j2 = 0; j2 < n; ++j2) {
      std::complex<double> s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          s += f[static_cast<std::size_t>(a) * n + b] *
               std::polar(1.0, kTwoPi * (static_cast<double>(a) * j1 + static_cast<double>(b) * j2) / n);
      out[static_cast<std::size_t>(j1) * n + j2] = s.real();
    }
  }
  return out;
}

// Midpoint rule over [0,1]^2 with q points per axis; exact for trigonometric
// polynomials of degree below q.
inline double integrate(const std::function<double(double, double)>& f, int q = 64) {
  double s = 0.0;
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) s += f((i + 0.5) / q, (j + 0.5) / q);
  return s / (static_cast<double>(q) * q);
}

// Samples f(j/N) of a closure.
inline std::vector<double> sample(const std::function<double(double, double)>& f, int n) {
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int j1 = 0; j1 < n; ++j1)
    for (int j2 = 0; j2 < n; ++j2)
      out[static_cast<std::size_t>(j1) * n + j2] = f(static_cast<double>(j1) / n, static_cast<double>(j2) / n);
  return out;
}

}  // namespace oracle

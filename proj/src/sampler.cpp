#include "sampler.hpp"

#include <algorithm>
#include <cmath>

namespace vbsde::detail {
namespace {

// Lagrange weights for nodes -1, 0, 1, 2 at offset t in [0, 1).
std::array<double, 4> cubic_weights(double t) {
  return {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
          -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
}

// Splits a coordinate in fine-grid units into a cell index in [0, m) and a
// fractional offset.
inline void locate(double x, int m, int& cell, double& frac) {
  const double s = (x - std::floor(x)) * m;
  double c = std::floor(s);
  frac = s - c;
  cell = static_cast<int>(c);
  if (cell >= m) {
    cell -= m;
  }
}

inline int wrap(int i, int m) {
  i %= m;
  return i < 0 ? i + m : i;
}

}  // namespace

PeriodicTable::PeriodicTable(const ScalarField& f, int factor, double scale)
    : n_(f.grid_size()), q_(factor), m_(f.grid_size() * factor) {
  const GridSignal g = upsample(f, factor);
  fine_.assign(g.values().begin(), g.values().end());
  for (double& v : fine_) {
    v *= scale;
    max_abs_ = std::max(max_abs_, std::abs(v));
  }
  split_.resize(static_cast<std::size_t>(q_) * q_ * n_ * 2 * n_);
  for (int p1 = 0; p1 < q_; ++p1) {
    for (int p2 = 0; p2 < q_; ++p2) {
      for (int r = 0; r < n_; ++r) {
        double* dst = split_.data() + ((static_cast<std::size_t>(p1) * q_ + p2) * n_ + r) * 2 * n_;
        for (int c = 0; c < 2 * n_; ++c) dst[c] = fine(q_ * r + p1, q_ * (c % n_) + p2);
      }
    }
  }
}

double PeriodicTable::linear(Vec2 x) const noexcept {
  int c1, c2;
  double t1, t2;
  locate(x.x1, m_, c1, t1);
  locate(x.x2, m_, c2, t2);
  const int d1 = c1 + 1 == m_ ? 0 : c1 + 1;
  const int d2 = c2 + 1 == m_ ? 0 : c2 + 1;
  return (1.0 - t1) * ((1.0 - t2) * fine(c1, c2) + t2 * fine(c1, d2)) +
         t1 * ((1.0 - t2) * fine(d1, c2) + t2 * fine(d1, d2));
}

double PeriodicTable::cubic(Vec2 x) const noexcept {
  int c1, c2;
  double t1, t2;
  locate(x.x1, m_, c1, t1);
  locate(x.x2, m_, c2, t2);
  const auto w1 = cubic_weights(t1);
  const auto w2 = cubic_weights(t2);
  double total = 0.0;
  for (int a = 0; a < 4; ++a) {
    const int i1 = wrap(c1 + a - 1, m_);
    double row = 0.0;
    for (int b = 0; b < 4; ++b) row += w2[b] * fine(i1, wrap(c2 + b - 1, m_));
    total += w1[a] * row;
  }
  return total;
}

std::array<Tap, 4> PeriodicTable::linear_taps(Vec2 shift) const noexcept {
  int c1, c2;
  double t1, t2;
  locate(shift.x1, m_, c1, t1);
  locate(shift.x2, m_, c2, t2);
  std::array<Tap, 4> taps;
  int k = 0;
  for (int d1 = 0; d1 < 2; ++d1) {
    for (int d2 = 0; d2 < 2; ++d2) {
      const int f1 = wrap(c1 + d1, m_);
      const int f2 = wrap(c2 + d2, m_);
      taps[k++] = {f1 % q_, f2 % q_, f1 / q_, f2 / q_, (d1 ? t1 : 1.0 - t1) * (d2 ? t2 : 1.0 - t2)};
    }
  }
  return taps;
}

std::array<Tap, 16> PeriodicTable::cubic_taps(Vec2 shift) const noexcept {
  int c1, c2;
  double t1, t2;
  locate(shift.x1, m_, c1, t1);
  locate(shift.x2, m_, c2, t2);
  const auto w1 = cubic_weights(t1);
  const auto w2 = cubic_weights(t2);
  std::array<Tap, 16> taps;
  int k = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const int f1 = wrap(c1 + a - 1, m_);
      const int f2 = wrap(c2 + b - 1, m_);
      taps[k++] = {f1 % q_, f2 % q_, f1 / q_, f2 / q_, w1[a] * w2[b]};
    }
  }
  return taps;
}

}  // namespace vbsde::detail

#pragma once

#include <array>
#include <vector>

#include "vbsde/torus_field.hpp"

namespace vbsde::detail {

/// One interpolation tap for a lattice-wide shifted read: the value at
/// lattice point z is weight * table.row(p1, p2, (z1 + a1) mod N)[z2 + a2].
struct Tap {
  int p1, p2, a1, a2;
  double weight;
};

/// Samples of a field on a grid refined by `factor`, kept in two layouts:
/// the plain fine grid for pointwise reads, and a phase-split copy in which
/// every lattice-shifted read becomes a contiguous row. Each phase row is
/// stored twice over (length 2N) so that row reads never wrap.
class PeriodicTable {
 public:
  PeriodicTable() = default;
  PeriodicTable(const ScalarField& f, int factor, double scale = 1.0);

  int base() const noexcept { return n_; }
  int factor() const noexcept { return q_; }
  double max_abs() const noexcept { return max_abs_; }

  const double* row(int p1, int p2, int r) const noexcept {
    return split_.data() + ((static_cast<std::size_t>(p1) * q_ + p2) * n_ + r) * 2 * n_;
  }

  /// Pointwise bilinear and cubic (4-point Lagrange) interpolation.
  double linear(Vec2 x) const noexcept;
  double cubic(Vec2 x) const noexcept;

  std::array<Tap, 4> linear_taps(Vec2 shift) const noexcept;
  std::array<Tap, 16> cubic_taps(Vec2 shift) const noexcept;

  /// out[z] = f(z / N + shift) on the lattice, through the given taps.
  template <std::size_t K>
  void gather(const std::array<Tap, K>& taps, double* out) const noexcept {
    const int n = n_;
    for (int z1 = 0; z1 < n; ++z1) {
      double* o = out + static_cast<std::size_t>(z1) * n;
      for (int z2 = 0; z2 < n; ++z2) o[z2] = 0.0;
      for (const Tap& t : taps) {
        const double* src = row(t.p1, t.p2, (z1 + t.a1) % n) + t.a2;
        const double w = t.weight;
        for (int z2 = 0; z2 < n; ++z2) o[z2] += w * src[z2];
      }
    }
  }

 private:
  double fine(int i1, int i2) const noexcept {
    return fine_[static_cast<std::size_t>(i1) * m_ + i2];
  }

  int n_ = 0;
  int q_ = 1;
  int m_ = 0;
  double max_abs_ = 0.0;
  std::vector<double> fine_;
  std::vector<double> split_;
};

}  // namespace vbsde::detail

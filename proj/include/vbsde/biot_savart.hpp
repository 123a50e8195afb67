#pragma once

#include <array>
#include <cstdint>
#include <numbers>

#include "vbsde/torus_field.hpp"

namespace vbsde {

/// Smallest nonzero eigenvalue of -Laplacian on the unit torus.
inline constexpr double kSpectralGap = 4.0 * std::numbers::pi * std::numbers::pi;

/// Solves -Laplacian g = f with zero mean: ghat(k) = fhat(k) / (4 pi^2 |k|^2).
/// Throws DomainError when f has a nonzero mean.
ScalarField green_solve(const ScalarField& f);

/// Divergence-free velocity with curl equal to omega:
///   u1 = -d g / d x2,  u2 = d g / d x1,  g = green_solve(omega).
VectorField apply_K(const ScalarField& omega);

/// d1 u2 - d2 u1 and d1 u1 + d2 u2, spectrally.
ScalarField curl(const VectorField& u);
ScalarField divergence(const VectorField& u);

struct EllipticReport {
  bool grad_bound_ok = false;  // ||grad K_j f|| <= ||f||
  bool poincare_ok = false;    // ||K_j f|| <= ||f|| / sqrt(lambda1)
  std::array<double, 2> grad_ratios{};
  std::array<double, 2> poincare_ratios{};
};

/// Throws DomainError for a zero or non-mean-zero field.
EllipticReport verify_elliptic_estimates(const ScalarField& f);

/// max_j ||K_j f||_{order,2} / ||f||_{order-1,2} for one field.
double elliptic_ratio(const ScalarField& f, int order);

/// Largest elliptic_ratio over `trials` random mean-zero fields on an n-grid.
/// Fields alternate between white and smooth spectra.
double measure_C0(int order, int trials, int n = 32, std::uint64_t seed = 1);

/// Supremum of the per-mode multiplier ratio over the resolved modes of an
/// n-grid, for one Sobolev order in 1..3.
double closed_form_C0(int order, int n);

/// closed_form_C0 maximized over orders 1..3; the constant used by the
/// solver's estimate formulas.
double closed_form_C0(int n);

}  // namespace vbsde

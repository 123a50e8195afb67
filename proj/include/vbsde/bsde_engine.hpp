#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vbsde/brownian.hpp"
#include "vbsde/spectral_oracle.hpp"
#include "vbsde/torus_field.hpp"

namespace vbsde {

struct SolverConfig {
  int N = 32;
  int L = 128;
  int M_outer = 32;
  int M_inner = 2000;
  double nu = 0.1;
  double T = 0.5;
  std::optional<double> alpha;  // empty: chosen by select_alpha
  double picard_tol = 1e-3;
  /// When set, the tolerance becomes this multiple of the solution noise
  /// floor of the first weighted iterate and picard_tol is ignored.
  std::optional<double> picard_tol_floor_multiple;
  int max_iter = 8;
  std::uint64_t base_seed = 1;
  int workers = 1;
  /// Subtract the h = 0 estimator and add back the exact heat semigroup.
  bool control_variate = true;
  int batches = 20;
  int oversample = 4;

  double dt() const noexcept { return T / L; }
  void validate() const;
};

/// Monte Carlo statistics of one iterate, per time node m = 0..L.
struct SamplingStats {
  int branches = 0;
  std::vector<double> pooled_se;  // sqrt(mean over lattice of SE^2)
  std::vector<double> max_se;     // max over lattice of SE
  /// Batch means on the lattice: batch_means[m][g * N * N + z]. Groups are
  /// contiguous branch ranges and identical across Picard iterations.
  std::vector<std::vector<double>> batch_means;
  int batches = 0;
};

/// Deterministic vorticity fields omega_n(tau_m), m = 0..L, representing
/// Y_n(t, x) = omega_n(T - t, x + sqrt(2 nu) B_t).
struct PicardIterate {
  std::vector<ScalarField> fields;
  int iteration = 0;
  double alpha = 0.0;
  double dt = 0.0;
  std::optional<SamplingStats> stats;  // empty for exact iterates

  int steps() const noexcept { return static_cast<int>(fields.size()) - 1; }
  int grid_size() const noexcept { return fields.front().grid_size(); }
  /// 4 x the largest pointwise standard error (0 for exact iterates).
  double mc_tolerance() const noexcept;
  /// Max over nodes of the lattice sup (4x oversampled).
  double sup_abs() const;

  /// fields = {psi, 0, ..., 0}: the drift-free start of the iteration.
  static PicardIterate zero(const ScalarField& psi, int steps, double dt);
  static PicardIterate from_trajectory(const VorticityTrajectory& traj);
};

struct IterationRecord {
  int iteration = 0;
  double delta_norm = 0.0;  // ||dY^a||_inf + ||dZ^a||_BMO
  double delta_sup = 0.0;
  double delta_bmo = 0.0;
  double solution_floor = 0.0;
  double difference_floor = 0.0;
  double sup_abs = 0.0;
  double mc_tolerance = 0.0;
  double seconds = 0.0;
};

struct BsdeSolution {
  PicardIterate Y;
  std::vector<VectorField> Z_fields;
  std::vector<IterationRecord> history;
  std::vector<double> ratios;
  std::vector<bool> ratio_above_noise;
  SolverConfig config;
  ScalarField psi{4};
  double alpha = 0.0;
  double C0 = 0.0;
  double C1 = 0.0;
  double tolerance = 0.0;
  bool converged = false;
};

/// xi(x) = psi(x + sqrt(2 nu) B_T).
ScalarField terminal_value(const ScalarField& psi, const BrownianPath& path, double nu);

/// exp(-sum <h_m, dB_m> - 1/2 sum |h_m|^2 dt) with left-point h. Throws
/// NumericalError when the exponent is not finite or exceeds 700.
double girsanov_weight(std::span<const Vec2> h, std::span<const Vec2> dB, double dt);
double log_girsanov_weight(std::span<const Vec2> h, std::span<const Vec2> dB, double dt);

/// Exact heat semigroup: fhat(k) exp(-4 pi^2 nu |k|^2 tau).
ScalarField heat_solution(const ScalarField& psi, double nu, double tau);

/// One application of the Picard map through Girsanov-weighted branches:
///   omega(tau_m, z) = E[psi(z + s W_m) exp(-sum <h_j, dW_j> - 1/2 sum |h_j|^2 dt)],
/// h_j = K(prev(tau_m - t_j))(z + s W_j) / s, s = sqrt(2 nu). Branches are
/// shared across lattice points and seeded by (base_seed, m, branch), so the
/// same branches are reused by every Picard iteration.
PicardIterate linear_bsde_solve(const PicardIterate& prev, const ScalarField& psi,
                                const SolverConfig& config);

/// Same map through Euler-Maruyama for dX = -u(tau - t, X) dt + s dW and
/// unweighted averages of psi(X_tau). Uses its own random stream.
PicardIterate drifted_sde_solve(const PicardIterate& prev, const ScalarField& psi,
                                const SolverConfig& config);

/// Spectral gradient of every node field.
std::vector<VectorField> extract_Z(const PicardIterate& iterate);

/// Largest alpha satisfying both weight conditions of the contraction
/// argument: max(16 C0^2 C1^2 (nu + T C0 C1^2) / nu^2, 4 C0^2 C1^2 / nu).
double select_alpha(double C0, double C1, double nu, double T);

/// Weighted sup part max_m e^{-alpha tau_m} sup|f_m| over node fields.
double weighted_sup(std::span<const ScalarField> fields, double alpha, double dt);
/// Weighted BMO part (int_0^T e^{-2 alpha tau} ||grad f(tau)||^2 dtau)^{1/2},
/// trapezoid rule over nodes.
double weighted_bmo(std::span<const ScalarField> fields, double alpha, double dt);
/// 4 x max_m e^{-alpha tau_m} pooled_se_m.
double solution_floor(const PicardIterate& it, double alpha);
/// 4 x max_m e^{-alpha tau_m} x pooled SE of the batch-mean difference.
double difference_floor(const PicardIterate& a, const PicardIterate& b, double alpha);

/// Picard iteration started from the drift-free solve. Throws
/// ConvergenceError after max_iter weighted solves without meeting the
/// tolerance, and ConfigError when the first weighted iterate's noise floor
/// exceeds an absolute picard_tol.
BsdeSolution picard_solve(const ScalarField& psi, const SolverConfig& config);

/// Per-t-node L2(T^2) norms of
///   xi - Y(t) - int_t^T <Z, K(Y)> ds - s int_t^T <Z, dB>
/// with left-point sums, for one path on the solution's grid.
std::vector<double> bsde_residual_profile(const PicardIterate& Y, const ScalarField& psi,
                                          const BrownianPath& path, double nu);
double bsde_residual(const BsdeSolution& solution, const BrownianPath& path);

}  // namespace vbsde

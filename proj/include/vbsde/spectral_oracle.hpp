#pragma once

#include <vector>

#include "vbsde/field_io.hpp"
#include "vbsde/torus_field.hpp"

namespace vbsde {

/// u . grad(omega) with u = K(omega), formed on a 3/2-padded grid and
/// truncated back to the input resolution.
ScalarField nonlinear_term(const ScalarField& omega);

/// Pseudo-spectral solution of the unforced vorticity equation on nodes
/// tau_m = m * dt, m = 0..L.
class VorticityTrajectory {
 public:
  VorticityTrajectory(std::vector<ScalarField> fields, double nu, double dt);

  const std::vector<ScalarField>& fields() const noexcept { return fields_; }
  const ScalarField& at(int m) const { return fields_.at(static_cast<std::size_t>(m)); }
  int steps() const noexcept { return static_cast<int>(fields_.size()) - 1; }
  int grid_size() const noexcept { return fields_.front().grid_size(); }
  double nu() const noexcept { return nu_; }
  double dt() const noexcept { return dt_; }
  double horizon() const noexcept { return dt_ * steps(); }

  /// Linear interpolation in tau, exact series evaluation in x.
  double evaluate(double tau, Vec2 x) const;

  TrajectoryData to_data() const { return {fields_, dt_, nu_}; }
  static VorticityTrajectory from_data(TrajectoryData data);

 private:
  std::vector<ScalarField> fields_;
  double nu_;
  double dt_;
};

/// Integrating-factor RK2 (Heun): diffusion is integrated exactly, the
/// advection term explicitly. Throws ConfigError when
/// dt * max|u| * 2 pi (N/2) exceeds 0.5 at any step; the message names a
/// step count that satisfies the bound at the offending state.
VorticityTrajectory evolve(const ScalarField& omega0, double nu, double T, int steps);

/// Max of |u| on the lattice; u = K(omega).
double max_velocity(const ScalarField& omega);

}  // namespace vbsde

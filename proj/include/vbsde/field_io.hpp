#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "vbsde/torus_field.hpp"

namespace vbsde {

/// Binary field checkpoint ("VBSF"), all integers and floats little-endian:
///
///   offset  size  content
///   0       4     magic "VBSF"
///   4       2     version (u16, currently 1)
///   6       2     N (u16)
///   8       1     mean-zero flag (u8, 0 or 1)
///   9       16*N*N coefficients as (re, im) f64 pairs in storage order:
///                 index i1 * N + i2, i <-> wavenumber i (i <= N/2) or i - N
inline constexpr std::uint16_t kFieldFormatVersion = 1;

void write_field(std::ostream& out, const ScalarField& f);
ScalarField read_field(std::istream& in);

void save_field(const std::filesystem::path& path, const ScalarField& f);
ScalarField load_field(const std::filesystem::path& path);

/// Trajectory checkpoint ("VBTR"): a header followed by L + 1 VBSF records
/// for the nodes tau_m = m * dt, m = 0..L.
///
///   0   4  magic "VBTR"
///   4   2  version (u16, currently 1)
///   6   4  L (u32)
///   10  8  dt (f64)
///   18  8  nu (f64)
///   26     L + 1 field records
struct TrajectoryData {
  std::vector<ScalarField> fields;
  double dt = 0.0;
  double nu = 0.0;
};

void write_trajectory(std::ostream& out, const TrajectoryData& data);
TrajectoryData read_trajectory(std::istream& in);

void save_trajectory(const std::filesystem::path& path, const TrajectoryData& data);
TrajectoryData load_trajectory(const std::filesystem::path& path);

}  // namespace vbsde

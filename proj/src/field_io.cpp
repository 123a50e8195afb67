#include "vbsde/field_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "binary_io.hpp"
#include "vbsde/errors.hpp"

namespace vbsde {
using detail::expect_magic;
using detail::get;
using detail::put;

void write_field(std::ostream& out, const ScalarField& f) {
  out.write("VBSF", 4);
  put<std::uint16_t>(out, kFieldFormatVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(f.grid_size()));
  put<std::uint8_t>(out, f.mean_zero() ? 1 : 0);
  for (const Complex& c : f.modes()) {
    put<double>(out, c.real());
    put<double>(out, c.imag());
  }
}

ScalarField read_field(std::istream& in) {
  expect_magic(in, "VBSF");
  const auto version = get<std::uint16_t>(in);
  if (version != kFieldFormatVersion)
    throw ConfigError("unsupported field format version " + std::to_string(version));
  const int n = get<std::uint16_t>(in);
  const auto mean_zero = get<std::uint8_t>(in);
  if (mean_zero > 1) throw ConfigError("corrupt mean-zero flag");
  validate_grid_size(n);
  std::vector<Complex> modes(static_cast<std::size_t>(n) * n);
  for (auto& c : modes) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    c = {re, im};
  }
  return ScalarField::from_modes(n, std::move(modes), mean_zero == 1);
}

void save_field(const std::filesystem::path& path, const ScalarField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  write_field(out, f);
  if (!out) throw ConfigError("write to " + path.string() + " failed");
}

ScalarField load_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_field(in);
}

void write_trajectory(std::ostream& out, const TrajectoryData& data) {
  if (data.fields.empty()) throw ConfigError("empty trajectory");
  out.write("VBTR", 4);
  put<std::uint16_t>(out, kFieldFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.fields.size() - 1));
  put<double>(out, data.dt);
  put<double>(out, data.nu);
  for (const auto& f : data.fields) write_field(out, f);
}

TrajectoryData read_trajectory(std::istream& in) {
  expect_magic(in, "VBTR");
  const auto version = get<std::uint16_t>(in);
  if (version != kFieldFormatVersion)
    throw ConfigError("unsupported trajectory format version " + std::to_string(version));
  TrajectoryData data;
  const auto steps = get<std::uint32_t>(in);
  data.dt = get<double>(in);
  data.nu = get<double>(in);
  data.fields.reserve(steps + 1);
  for (std::uint32_t m = 0; m <= steps; ++m) data.fields.push_back(read_field(in));
  for (const auto& f : data.fields) {
    if (f.grid_size() != data.fields.front().grid_size())
      throw ConfigError("trajectory mixes grid sizes");
  }
  return data;
}

void save_trajectory(const std::filesystem::path& path, const TrajectoryData& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  write_trajectory(out, data);
  if (!out) throw ConfigError("write to " + path.string() + " failed");
}

TrajectoryData load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_trajectory(in);
}

}  // namespace vbsde

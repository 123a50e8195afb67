#include "vbsde/brownian.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

#include "vbsde/errors.hpp"

namespace vbsde {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// Uniform on the open interval (0, 1) from 53 high bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32 | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

inline double inverse_normal_cdf(double u) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c,
                                        std::array<std::uint32_t, 2> k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

Vec2 normal_pair(std::uint64_t seed, std::uint64_t index, Stream stream) noexcept {
  const auto r = philox4x32({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                             static_cast<std::uint32_t>(stream), 0u},
                            {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
  return {inverse_normal_cdf(to_unit(r[0], r[1])), inverse_normal_cdf(to_unit(r[2], r[3]))};
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
  return splitmix(splitmix(splitmix(base) ^ a) ^ b);
}

BrownianPath simulate(std::uint64_t seed, int steps, double T) {
  if (steps < 1) throw ConfigError("Brownian path needs at least one step");
  if (!(T > 0.0)) throw ConfigError("Brownian path horizon must be positive");
  BrownianPath p;
  p.seed = seed;
  p.dt = T / steps;
  const double sd = std::sqrt(p.dt);
  p.values.reserve(static_cast<std::size_t>(steps) + 1);
  p.increments.reserve(static_cast<std::size_t>(steps));
  p.values.push_back({});
  for (int m = 0; m < steps; ++m) {
    const Vec2 dB = sd * normal_pair(seed, static_cast<std::uint64_t>(m), Stream::path);
    p.increments.push_back(dB);
    p.values.push_back(p.values.back() + dB);
  }
  return p;
}

BrownianPath branch(const BrownianPath& path, int m, std::uint64_t branch_seed,
                    std::optional<int> sub_steps) {
  if (m < 0 || m > path.steps())
    throw DomainError("branch index " + std::to_string(m) + " outside [0, " +
                      std::to_string(path.steps()) + "]");
  const int extra = sub_steps.value_or(path.steps() - m);
  if (extra < 0) throw DomainError("negative branch length");
  BrownianPath out;
  out.seed = branch_seed;
  out.dt = path.dt;
  out.values.assign(path.values.begin(), path.values.begin() + m + 1);
  out.increments.assign(path.increments.begin(), path.increments.begin() + m);
  const double sd = std::sqrt(path.dt);
  for (int j = 0; j < extra; ++j) {
    const Vec2 dB = sd * normal_pair(branch_seed, static_cast<std::uint64_t>(m + j), Stream::branch);
    out.increments.push_back(dB);
    out.values.push_back(out.values.back() + dB);
  }
  return out;
}

BrownianPath coarsen(const BrownianPath& path, int factor) {
  if (factor < 1 || path.steps() % factor != 0)
    throw ConfigError("coarsen: factor must divide the step count");
  BrownianPath out;
  out.seed = path.seed;
  out.dt = path.dt * factor;
  for (int m = 0; m <= path.steps(); m += factor) out.values.push_back(path.values[static_cast<std::size_t>(m)]);
  for (std::size_t m = 1; m < out.values.size(); ++m) out.increments.push_back(out.values[m] - out.values[m - 1]);
  return out;
}

Vec2 scaled_displacement(const BrownianPath& path, int m, double nu) {
  if (m < 0 || m > path.steps()) throw DomainError("path index out of range");
  if (!(nu >= 0.0)) throw ConfigError("nu must be non-negative");
  return std::sqrt(2.0 * nu) * path.values[static_cast<std::size_t>(m)];
}

std::vector<BrownianPath> simulate_ensemble(std::uint64_t base_seed, int count, int steps, double T) {
  if (count < 0) throw ConfigError("negative path count");
  std::vector<BrownianPath> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(simulate(base_seed ^ static_cast<std::uint64_t>(i), steps, T));
  return out;
}

void write_path_csv(std::ostream& out, const BrownianPath& path) {
  out << "m,t,B1,B2\n" << std::setprecision(17);
  for (int m = 0; m <= path.steps(); ++m) {
    const Vec2 b = path.values[static_cast<std::size_t>(m)];
    out << m << ',' << path.time(m) << ',' << b.x1 << ',' << b.x2 << '\n';
  }
}

}  // namespace vbsde

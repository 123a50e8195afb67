#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "vbsde/torus_field.hpp"

namespace vbsde {

/// Philox4x32-10 counter-based generator (Salmon et al.). Pure function of
/// (counter, key).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Independent streams drawn from the same seed.
enum class Stream : std::uint32_t { path = 0, branch = 1, inner = 2, drift = 3 };

/// Two independent standard normals for (seed, index, stream), via the
/// inverse normal CDF of two 53-bit uniforms.
Vec2 normal_pair(std::uint64_t seed, std::uint64_t index, Stream stream) noexcept;

/// Mixes several integers into one 64-bit seed (splitmix64 finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// Discrete 2D Brownian motion on t_m = m * dt, m = 0..L.
struct BrownianPath {
  std::uint64_t seed = 0;
  double dt = 0.0;
  std::vector<Vec2> values;      // B(t_m), values[0] = 0
  std::vector<Vec2> increments;  // values[m+1] - values[m]

  int steps() const noexcept { return static_cast<int>(increments.size()); }
  double horizon() const noexcept { return dt * steps(); }
  double time(int m) const noexcept { return dt * m; }
};

/// Increment m is sqrt(dt) * normal_pair(seed, m, Stream::path).
BrownianPath simulate(std::uint64_t seed, int steps, double T);

/// Agrees with `path` on t_0..t_m, then continues with L_sub fresh
/// increments keyed by branch_seed (default L_sub: up to the parent horizon).
BrownianPath branch(const BrownianPath& path, int m, std::uint64_t branch_seed,
                    std::optional<int> sub_steps = std::nullopt);

/// The same path sampled every `factor` steps (steps must be divisible).
BrownianPath coarsen(const BrownianPath& path, int factor);

/// sqrt(2 nu) * B(t_m).
Vec2 scaled_displacement(const BrownianPath& path, int m, double nu);

/// Paths with seeds base_seed ^ i, i = 0..count-1.
std::vector<BrownianPath> simulate_ensemble(std::uint64_t base_seed, int count, int steps, double T);

/// CSV dump with header "m,t,B1,B2".
void write_path_csv(std::ostream& out, const BrownianPath& path);

}  // namespace vbsde

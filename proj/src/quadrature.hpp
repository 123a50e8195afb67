#pragma once

#include <vector>

namespace vbsde::detail {

/// Tail integrals I_j = int_{t_j}^{t_L} g over node values g_0..g_L with
/// spacing dt. Each interval uses the cubic through its four nearest nodes
/// (one-sided at the ends), so the rule is fourth order; fewer than four
/// nodes fall back to the trapezoid rule.
inline std::vector<double> tail_integrals(const std::vector<double>& g, double dt) {
  const std::size_t n = g.size();
  std::vector<double> tail(n, 0.0);
  if (n < 2) return tail;
  auto interval = [&](std::size_t j) {
    if (n < 4) return 0.5 * (g[j] + g[j + 1]);
    if (j == 0) return (9 * g[0] + 19 * g[1] - 5 * g[2] + g[3]) / 24;
    if (j + 2 == n) return (g[j - 2] - 5 * g[j - 1] + 19 * g[j] + 9 * g[j + 1]) / 24;
    return (-g[j - 1] + 13 * g[j] + 13 * g[j + 1] - g[j + 2]) / 24;
  };
  for (std::size_t j = n - 1; j-- > 0;) tail[j] = tail[j + 1] + interval(j) * dt;
  return tail;
}

}  // namespace vbsde::detail

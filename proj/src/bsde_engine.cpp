#include "vbsde/bsde_engine.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "parallel.hpp"
#include "quadrature.hpp"
#include "sampler.hpp"
#include "vbsde/biot_savart.hpp"
#include "vbsde/errors.hpp"

namespace vbsde {
namespace {

constexpr double kMaxLogWeight = 700.0;

using detail::PeriodicTable;

std::size_t cells(int n) { return static_cast<std::size_t>(n) * n; }

// Per-node drift tables h = K(omega) / s.
struct DriftTables {
  std::vector<PeriodicTable> h1, h2;
  bool zero = true;
  double max_h = 0.0;
};

DriftTables build_drift(const PicardIterate& prev, double sigma, int oversample) {
  DriftTables d;
  const int L = prev.steps();
  d.h1.resize(static_cast<std::size_t>(L) + 1);
  d.h2.resize(static_cast<std::size_t>(L) + 1);
  // Node 0 never drives a step: the drift at branch time t_j is read from
  // node m - j >= 1.
  for (int f = 1; f <= L; ++f) {
    const ScalarField& w = prev.fields[static_cast<std::size_t>(f)];
    if (w.is_zero()) continue;
    d.zero = false;
    const VectorField u = apply_K(w.projected_mean_zero());
    d.h1[static_cast<std::size_t>(f)] = PeriodicTable(u.c1, oversample, 1.0 / sigma);
    d.h2[static_cast<std::size_t>(f)] = PeriodicTable(u.c2, oversample, 1.0 / sigma);
    const GridSignal g1 = upsample(u.c1, oversample);
    const GridSignal g2 = upsample(u.c2, oversample);
    for (std::size_t i = 0; i < g1.values().size(); ++i)
      d.max_h = std::max(d.max_h, std::hypot(g1.values()[i], g2.values()[i]) / sigma);
  }
  return d;
}

void check_drift_guard(const DriftTables& d, double dt) {
  const double c = d.max_h * std::sqrt(dt);
  if (c > 1.0)
    throw NumericalError("drift guard violated: max|h| sqrt(dt) = " + std::to_string(c) +
                         " > 1; increase L");
}

// Accumulates branch contributions for one node.
struct NodeAccumulator {
  NodeAccumulator(int n, int groups) : n2(cells(n)), sum(n2), sumsq(n2), batch(n2 * groups) {}

  void add(const double* c, int group) {
    double* b = batch.data() + static_cast<std::size_t>(group) * n2;
    for (std::size_t z = 0; z < n2; ++z) {
      sum[z] += c[z];
      sumsq[z] += c[z] * c[z];
      b[z] += c[z];
    }
  }

  std::size_t n2;
  std::vector<double> sum, sumsq, batch;
};

struct NodeResult {
  std::vector<double> mean;
  double pooled_se = 0.0;
  double max_se = 0.0;
  std::vector<double> batch_means;
};

int group_of(int b, int M, int G) {
  return static_cast<int>(static_cast<std::int64_t>(b) * G / M);
}

NodeResult finish_node(NodeAccumulator& acc, int M, int G, const std::vector<double>& offset) {
  NodeResult r;
  r.mean.resize(acc.n2);
  double pooled = 0.0;
  for (std::size_t z = 0; z < acc.n2; ++z) {
    const double mean = acc.sum[z] / M;
    const double var = std::max(0.0, (acc.sumsq[z] - acc.sum[z] * mean) / (M - 1));
    const double se2 = var / M;
    pooled += se2;
    r.max_se = std::max(r.max_se, std::sqrt(se2));
    r.mean[z] = mean + (offset.empty() ? 0.0 : offset[z]);
  }
  r.pooled_se = std::sqrt(pooled / acc.n2);
  r.batch_means.resize(acc.batch.size());
  std::vector<int> count(static_cast<std::size_t>(G), 0);
  for (int b = 0; b < M; ++b) ++count[static_cast<std::size_t>(group_of(b, M, G))];
  for (int g = 0; g < G; ++g) {
    for (std::size_t z = 0; z < acc.n2; ++z) {
      const std::size_t i = static_cast<std::size_t>(g) * acc.n2 + z;
      r.batch_means[i] = acc.batch[i] / count[static_cast<std::size_t>(g)];
    }
  }
  return r;
}

// logw(z) -= <h, dW> + |h|^2 dt / 2 with h = (A, B) read at z + shift through
// bilinear taps. Rows are addressed without integer division: the row index
// (z1 + a1) wraps at most once.
void accumulate_log_weight(const PeriodicTable& A, const PeriodicTable& B,
                           const std::array<detail::Tap, 4>& taps, Vec2 dW, double dt,
                           double* __restrict logw) {
  const int n = A.base();
  const std::size_t stride = 2 * static_cast<std::size_t>(n);
  const double* pa[4];
  const double* pb[4];
  int shift[4];
  double w[4];
  for (int k = 0; k < 4; ++k) {
    pa[k] = A.row(taps[k].p1, taps[k].p2, 0) + taps[k].a2;
    pb[k] = B.row(taps[k].p1, taps[k].p2, 0) + taps[k].a2;
    shift[k] = taps[k].a1;
    w[k] = taps[k].weight;
  }
  const double hdt = 0.5 * dt;
  for (int z1 = 0; z1 < n; ++z1) {
    std::size_t off[4];
    for (int k = 0; k < 4; ++k) {
      int r = z1 + shift[k];
      if (r >= n) r -= n;
      off[k] = static_cast<std::size_t>(r) * stride;
    }
    const double* __restrict a0 = pa[0] + off[0];
    const double* __restrict a1 = pa[1] + off[1];
    const double* __restrict a2 = pa[2] + off[2];
    const double* __restrict a3 = pa[3] + off[3];
    const double* __restrict b0 = pb[0] + off[0];
    const double* __restrict b1 = pb[1] + off[1];
    const double* __restrict b2 = pb[2] + off[2];
    const double* __restrict b3 = pb[3] + off[3];
    double* __restrict lw = logw + static_cast<std::size_t>(z1) * n;
#pragma GCC ivdep
    for (int z2 = 0; z2 < n; ++z2) {
      const double h1 = w[0] * a0[z2] + w[1] * a1[z2] + w[2] * a2[z2] + w[3] * a3[z2];
      const double h2 = w[0] * b0[z2] + w[1] * b1[z2] + w[2] * b2[z2] + w[3] * b3[z2];
      lw[z2] -= h1 * dW.x1 + h2 * dW.x2 + hdt * (h1 * h1 + h2 * h2);
    }
  }
}

void check_log_weights(const double* logw, std::size_t count, int node) {
  for (std::size_t i = 0; i < count; ++i) {
    const double v = logw[i];
    if (!std::isfinite(v) || v > kMaxLogWeight)
      throw NumericalError("Girsanov exponent " + std::to_string(v) + " at node " +
                           std::to_string(node) + " is out of range");
  }
}

std::vector<double> lattice_values(const ScalarField& f) {
  const GridSignal g = inverse_transform(f);
  return {g.values().begin(), g.values().end()};
}

enum class Estimator { weighted, drifted };

PicardIterate solve_map(const PicardIterate& prev, const ScalarField& psi, const SolverConfig& cfg,
                        Estimator kind) {
  cfg.validate();
  const int n = cfg.N;
  const int L = cfg.L;
  if (psi.grid_size() != n) throw ConfigError("psi grid size does not match N");
  if (prev.steps() != L || prev.grid_size() != n)
    throw ConfigError("previous iterate does not match the configured grid");
  const double dt = cfg.dt();
  const double sigma = std::sqrt(2.0 * cfg.nu);
  const double sqdt = std::sqrt(dt);
  const int M = cfg.M_inner;
  const int G = std::min(cfg.batches, M);
  const std::size_t n2 = cells(n);

  const DriftTables drift = build_drift(prev, sigma, cfg.oversample);
  check_drift_guard(drift, dt);
  const PeriodicTable psi_table(psi, cfg.oversample);

  PicardIterate out;
  out.iteration = prev.iteration + 1;
  out.alpha = prev.alpha;
  out.dt = dt;
  out.fields.assign(static_cast<std::size_t>(L) + 1, ScalarField(n, true));
  out.fields[0] = psi;

  SamplingStats stats;
  stats.branches = M;
  stats.batches = G;
  stats.pooled_se.assign(static_cast<std::size_t>(L) + 1, 0.0);
  stats.max_se.assign(static_cast<std::size_t>(L) + 1, 0.0);
  stats.batch_means.assign(static_cast<std::size_t>(L) + 1, {});
  {
    const auto v = lattice_values(psi);
    auto& b0 = stats.batch_means[0];
    b0.resize(n2 * G);
    for (int g = 0; g < G; ++g) std::copy(v.begin(), v.end(), b0.begin() + g * n2);
  }

  // With the control variate, branch contributions are measured against the
  // drift-free estimator, whose mean is the exact heat semigroup.
  const bool cv = cfg.control_variate;
  if (cv && drift.zero) {
    for (int m = 1; m <= L; ++m) out.fields[static_cast<std::size_t>(m)] = heat_solution(psi, cfg.nu, m * dt);
    out.stats.reset();
    return out;
  }

  const Stream stream = kind == Estimator::weighted ? Stream::inner : Stream::drift;

  auto node_task = [&](int m) {
    NodeAccumulator acc(n, G);
    const std::size_t steps = static_cast<std::size_t>(m);
    // Branches are processed in blocks, step-major inside a block, so the
    // drift table of one node stays in cache while every branch reads it.
    constexpr int kBlock = 16;
    std::vector<double> logw(kBlock * n2), end(n2), contrib(n2), base_end;
    std::vector<Vec2> dWs(kBlock * steps), Ws(kBlock * (steps + 1)), X;
    if (kind == Estimator::drifted) {
      X.resize(n2);
      base_end.resize(n2);
    }
    for (int b0 = 0; b0 < M; b0 += kBlock) {
      const int nb = std::min(kBlock, M - b0);
      for (int bb = 0; bb < nb; ++bb) {
        const std::uint64_t seed =
            derive_seed(cfg.base_seed, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(b0 + bb));
        Vec2* dW = dWs.data() + bb * steps;
        Vec2* W = Ws.data() + bb * (steps + 1);
        W[0] = {};
        for (std::size_t j = 0; j < steps; ++j) {
          dW[j] = sqdt * normal_pair(seed, j, stream);
          W[j + 1] = W[j] + dW[j];
        }
      }
      if (kind == Estimator::weighted && !drift.zero) {
        std::fill(logw.begin(), logw.begin() + nb * n2, 0.0);
        for (std::size_t j = 0; j < steps; ++j) {
          const std::size_t f = steps - j;
          const PeriodicTable& A = drift.h1[f];
          const PeriodicTable& B = drift.h2[f];
          if (A.base() == 0) continue;
          for (int bb = 0; bb < nb; ++bb) {
            const Vec2 shift = sigma * Ws[bb * (steps + 1) + j];
            accumulate_log_weight(A, B, A.linear_taps(shift), dWs[bb * steps + j], dt, logw.data() + bb * n2);
          }
        }
      }
      for (int bb = 0; bb < nb; ++bb) {
        const Vec2 Wm = Ws[bb * (steps + 1) + steps];
        if (kind == Estimator::weighted) {
          psi_table.gather(psi_table.cubic_taps(sigma * Wm), end.data());
          if (drift.zero) {
            std::copy(end.begin(), end.end(), contrib.begin());
          } else {
            const double* lw = logw.data() + bb * n2;
            check_log_weights(lw, n2, m);
            for (std::size_t z = 0; z < n2; ++z) {
              const double r = std::exp(lw[z]);
              contrib[z] = end[z] * (cv ? r - 1.0 : r);
            }
          }
        } else {
          for (int z1 = 0; z1 < n; ++z1)
            for (int z2 = 0; z2 < n; ++z2)
              X[static_cast<std::size_t>(z1) * n + z2] = {static_cast<double>(z1) / n, static_cast<double>(z2) / n};
          for (std::size_t j = 0; j < steps; ++j) {
            const Vec2 dW = dWs[bb * steps + j];
            const PeriodicTable& A = drift.h1[steps - j];
            const PeriodicTable& B = drift.h2[steps - j];
            if (A.base() != 0) {
              for (auto& x : X) {
                const Vec2 h{A.linear(x), B.linear(x)};
                x = x + (sigma * dW - (sigma * dt) * h);
              }
            } else {
              for (auto& x : X) x = x + sigma * dW;
            }
          }
          for (std::size_t z = 0; z < n2; ++z) end[z] = psi_table.cubic(X[z]);
          if (cv) {
            psi_table.gather(psi_table.cubic_taps(sigma * Wm), base_end.data());
            for (std::size_t z = 0; z < n2; ++z) contrib[z] = end[z] - base_end[z];
          } else {
            std::copy(end.begin(), end.end(), contrib.begin());
          }
        }
        acc.add(contrib.data(), group_of(b0 + bb, M, G));
      }
    }
    const std::vector<double> offset =
        cv ? lattice_values(heat_solution(psi, cfg.nu, m * dt)) : std::vector<double>{};
    NodeResult r = finish_node(acc, M, G, offset);
    for (std::size_t i = 0; i < r.batch_means.size(); ++i)
      r.batch_means[i] += offset.empty() ? 0.0 : offset[i % n2];
    const ScalarField field = forward_transform(GridSignal(n, std::move(r.mean))).projected_mean_zero();
    for (const Complex& c : field.modes()) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
        throw NumericalError("non-finite estimate at node " + std::to_string(m));
    }
    const auto mi = static_cast<std::size_t>(m);
    out.fields[mi] = field;
    stats.pooled_se[mi] = r.pooled_se;
    stats.max_se[mi] = r.max_se;
    stats.batch_means[mi] = std::move(r.batch_means);
  };

  std::vector<int> order(static_cast<std::size_t>(L));
  std::iota(order.begin(), order.end(), 1);
  std::reverse(order.begin(), order.end());
  detail::parallel_for(order, cfg.workers, node_task);
  out.stats = std::move(stats);
  return out;
}

double weight(double alpha, double tau) { return std::exp(-alpha * tau); }

double gradient_energy(const ScalarField& f) {
  const VectorField g = gradient(f);
  return std::pow(l2_norm(g.c1), 2) + std::pow(l2_norm(g.c2), 2);
}

// Lattice values of one node as seen by the batch statistics; exact
// iterates contribute a constant.
const double* batch_row(const PicardIterate& it, int m, int g, std::vector<double>& scratch) {
  if (it.stats && !it.stats->batch_means[static_cast<std::size_t>(m)].empty())
    return it.stats->batch_means[static_cast<std::size_t>(m)].data() + cells(it.grid_size()) * g;
  if (scratch.empty()) scratch = lattice_values(it.fields[static_cast<std::size_t>(m)]);
  return scratch.data();
}

}  // namespace

void SolverConfig::validate() const {
  validate_grid_size(N);
  if (L < 1) throw ConfigError("L must be >= 1");
  if (M_outer < 1) throw ConfigError("M_outer must be >= 1");
  if (M_inner < 2) throw ConfigError("M_inner must be >= 2");
  if (!(nu > 0.0)) throw ConfigError("nu must be positive");
  if (!(T > 0.0)) throw ConfigError("T must be positive");
  if (alpha && !(*alpha >= 0.0)) throw ConfigError("alpha must be non-negative");
  if (!(picard_tol > 0.0)) throw ConfigError("picard_tol must be positive");
  if (picard_tol_floor_multiple && !(*picard_tol_floor_multiple > 0.0))
    throw ConfigError("picard_tol_floor_multiple must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (batches < 2) throw ConfigError("batches must be >= 2");
  if (oversample < 1 || oversample > 16) throw ConfigError("oversample must lie in [1, 16]");
}

double PicardIterate::mc_tolerance() const noexcept {
  if (!stats) return 0.0;
  double m = 0.0;
  for (double v : stats->max_se) m = std::max(m, v);
  return 4.0 * m;
}

double PicardIterate::sup_abs() const {
  double m = 0.0;
  for (const auto& f : fields) m = std::max(m, sup_norm(f));
  return m;
}

PicardIterate PicardIterate::zero(const ScalarField& psi, int steps, double dt) {
  if (steps < 1) throw ConfigError("iterate needs at least one step");
  PicardIterate it;
  it.dt = dt;
  it.fields.assign(static_cast<std::size_t>(steps) + 1, ScalarField(psi.grid_size(), true));
  it.fields[0] = psi;
  return it;
}

PicardIterate PicardIterate::from_trajectory(const VorticityTrajectory& traj) {
  PicardIterate it;
  it.dt = traj.dt();
  it.fields = traj.fields();
  return it;
}

ScalarField terminal_value(const ScalarField& psi, const BrownianPath& path, double nu) {
  if (path.steps() < 1) throw ConfigError("terminal_value needs a path with at least one step");
  return translate(psi, scaled_displacement(path, path.steps(), nu));
}

double log_girsanov_weight(std::span<const Vec2> h, std::span<const Vec2> dB, double dt) {
  if (h.size() != dB.size()) throw ConfigError("girsanov_weight: length mismatch");
  double s = 0.0;
  for (std::size_t j = 0; j < h.size(); ++j) {
    s -= h[j].x1 * dB[j].x1 + h[j].x2 * dB[j].x2;
    s -= 0.5 * (h[j].x1 * h[j].x1 + h[j].x2 * h[j].x2) * dt;
  }
  if (!std::isfinite(s) || s > kMaxLogWeight)
    throw NumericalError("Girsanov exponent " + std::to_string(s) + " is out of range");
  return s;
}

double girsanov_weight(std::span<const Vec2> h, std::span<const Vec2> dB, double dt) {
  return std::exp(log_girsanov_weight(h, dB, dt));
}

ScalarField heat_solution(const ScalarField& psi, double nu, double tau) {
  if (!(tau >= 0.0)) throw DomainError("heat_solution: negative time");
  const int n = psi.grid_size();
  std::vector<Complex> modes(psi.modes().begin(), psi.modes().end());
  for (int i1 = 0; i1 < n; ++i1) {
    const int k1 = ScalarField::wavenumber_of(i1, n);
    for (int i2 = 0; i2 < n; ++i2) {
      const int k2 = ScalarField::wavenumber_of(i2, n);
      modes[static_cast<std::size_t>(i1) * n + i2] *= std::exp(-kSpectralGap * nu * (k1 * k1 + k2 * k2) * tau);
    }
  }
  return FieldAccess::make(n, psi.mean_zero(), std::move(modes));
}

PicardIterate linear_bsde_solve(const PicardIterate& prev, const ScalarField& psi,
                                const SolverConfig& config) {
  return solve_map(prev, psi, config, Estimator::weighted);
}

PicardIterate drifted_sde_solve(const PicardIterate& prev, const ScalarField& psi,
                                const SolverConfig& config) {
  return solve_map(prev, psi, config, Estimator::drifted);
}

std::vector<VectorField> extract_Z(const PicardIterate& iterate) {
  std::vector<VectorField> z;
  z.reserve(iterate.fields.size());
  for (const auto& f : iterate.fields) z.push_back(gradient(f));
  return z;
}

double select_alpha(double C0, double C1, double nu, double T) {
  if (!(nu > 0.0) || !(T >= 0.0) || !(C0 >= 0.0) || !(C1 >= 0.0))
    throw ConfigError("select_alpha: invalid constants");
  const double a = C0 * C0 * C1 * C1;
  return std::max(16.0 * a * (nu + T * C0 * C1 * C1) / (nu * nu), 4.0 * a / nu);
}

double weighted_sup(std::span<const ScalarField> fields, double alpha, double dt) {
  double m = 0.0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i].is_zero()) continue;
    m = std::max(m, weight(alpha, static_cast<double>(i) * dt) * sup_norm(fields[i]));
  }
  return m;
}

double weighted_bmo(std::span<const ScalarField> fields, double alpha, double dt) {
  if (fields.size() < 2) return 0.0;
  std::vector<double> g(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const double w = weight(alpha, static_cast<double>(i) * dt);
    g[i] = w * w * gradient_energy(fields[i]);
  }
  return std::sqrt(std::max(0.0, detail::tail_integrals(g, dt).front()));
}

double solution_floor(const PicardIterate& it, double alpha) {
  if (!it.stats) return 0.0;
  double m = 0.0;
  for (std::size_t i = 0; i < it.stats->pooled_se.size(); ++i)
    m = std::max(m, weight(alpha, static_cast<double>(i) * it.dt) * it.stats->pooled_se[i]);
  return 4.0 * m;
}

double difference_floor(const PicardIterate& a, const PicardIterate& b, double alpha) {
  if (!a.stats && !b.stats) return 0.0;
  if (a.steps() != b.steps() || a.grid_size() != b.grid_size())
    throw ConfigError("difference_floor: iterates do not share a grid");
  const int G = a.stats ? a.stats->batches : b.stats->batches;
  if (a.stats && b.stats && a.stats->batches != b.stats->batches)
    throw ConfigError("difference_floor: iterates use different batch layouts");
  const std::size_t n2 = cells(a.grid_size());
  double best = 0.0;
  for (int m = 0; m <= a.steps(); ++m) {
    std::vector<double> sa, sb;
    std::vector<double> sum(n2, 0.0), sumsq(n2, 0.0);
    for (int g = 0; g < G; ++g) {
      const double* ra = batch_row(a, m, g, sa);
      const double* rb = batch_row(b, m, g, sb);
      for (std::size_t z = 0; z < n2; ++z) {
        const double d = ra[z] - rb[z];
        sum[z] += d;
        sumsq[z] += d * d;
      }
    }
    double pooled = 0.0;
    for (std::size_t z = 0; z < n2; ++z) {
      const double mean = sum[z] / G;
      pooled += std::max(0.0, (sumsq[z] - sum[z] * mean) / (G - 1)) / G;
    }
    best = std::max(best, weight(alpha, m * a.dt) * std::sqrt(pooled / n2));
  }
  return 4.0 * best;
}

BsdeSolution picard_solve(const ScalarField& psi, const SolverConfig& config) {
  config.validate();
  if (psi.grid_size() != config.N) throw ConfigError("psi grid size does not match N");
  if (std::abs(psi.modes()[0]) > 0.0) throw DomainError("psi must be mean-zero");

  BsdeSolution sol;
  sol.config = config;
  sol.psi = psi;
  sol.C1 = sup_norm(psi);
  sol.C0 = closed_form_C0(config.N);
  sol.alpha = config.alpha ? *config.alpha : select_alpha(sol.C0, sol.C1, config.nu, config.T);
  const double dt = config.dt();
  using clock = std::chrono::steady_clock;

  auto t0 = clock::now();
  PicardIterate prev = linear_bsde_solve(PicardIterate::zero(psi, config.L, dt), psi, config);
  prev.iteration = 0;
  prev.alpha = sol.alpha;
  {
    IterationRecord rec;
    rec.iteration = 0;
    rec.solution_floor = solution_floor(prev, sol.alpha);
    rec.sup_abs = prev.sup_abs();
    rec.mc_tolerance = prev.mc_tolerance();
    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    sol.history.push_back(rec);
  }

  double tol = config.picard_tol;
  for (int n = 1; n <= config.max_iter; ++n) {
    t0 = clock::now();
    PicardIterate next = linear_bsde_solve(prev, psi, config);
    next.iteration = n;
    std::vector<ScalarField> delta;
    delta.reserve(next.fields.size());
    for (std::size_t i = 0; i < next.fields.size(); ++i) delta.push_back(next.fields[i] - prev.fields[i]);

    IterationRecord rec;
    rec.iteration = n;
    rec.delta_sup = weighted_sup(delta, sol.alpha, dt);
    rec.delta_bmo = weighted_bmo(delta, sol.alpha, dt);
    rec.delta_norm = rec.delta_sup + rec.delta_bmo;
    rec.solution_floor = solution_floor(next, sol.alpha);
    rec.difference_floor = difference_floor(next, prev, sol.alpha);
    rec.sup_abs = next.sup_abs();
    rec.mc_tolerance = next.mc_tolerance();

    if (n == 1) {
      if (config.picard_tol_floor_multiple) {
        tol = *config.picard_tol_floor_multiple * rec.solution_floor;
      } else if (rec.solution_floor > tol) {
        throw ConfigError("Monte Carlo noise floor " + std::to_string(rec.solution_floor) +
                          " exceeds picard_tol " + std::to_string(tol) +
                          "; increase M_inner");
      }
    }
    if (n >= 2) {
      const IterationRecord& last = sol.history.back();
      sol.ratios.push_back(last.delta_norm > 0.0 ? rec.delta_norm / last.delta_norm : 0.0);
      sol.ratio_above_noise.push_back(rec.delta_sup > rec.difference_floor &&
                                      last.delta_sup > last.difference_floor);
    }
    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    sol.history.push_back(rec);
    prev = std::move(next);
    if (rec.delta_norm <= tol) {
      sol.converged = true;
      break;
    }
  }
  sol.tolerance = tol;
  prev.alpha = sol.alpha;
  sol.Y = std::move(prev);
  sol.Z_fields = extract_Z(sol.Y);
  if (!sol.converged)
    throw ConvergenceError("Picard iteration did not reach tolerance " + std::to_string(tol) +
                               " within " + std::to_string(config.max_iter) + " iterations",
                           sol.ratios);
  return sol;
}

std::vector<double> bsde_residual_profile(const PicardIterate& Y, const ScalarField& psi,
                                          const BrownianPath& path, double nu) {
  const int L = Y.steps();
  if (path.steps() != L) throw ConfigError("residual: path and solution use different grids");
  if (std::abs(path.dt - Y.dt) > 1e-12 * Y.dt)
    throw ConfigError("residual: path and solution use different time steps");
  const int n = Y.grid_size();
  const double sigma = std::sqrt(2.0 * nu);
  constexpr int kUp = 2;
  auto samples = [&](const ScalarField& f, Vec2 shift) {
    const GridSignal g = upsample(translate(f, shift), kUp);
    return std::vector<double>(g.values().begin(), g.values().end());
  };
  // Field at t-node j is omega(tau_{L-j}) shifted by s B_{t_j}.
  const auto xi = samples(psi, scaled_displacement(path, L, nu));
  const std::size_t n2 = static_cast<std::size_t>(kUp * n) * (kUp * n);
  std::vector<double> tail(n2, 0.0);
  std::vector<double> out(static_cast<std::size_t>(L) + 1, 0.0);
  auto norm_of = [&](const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n2; ++i) {
      const double r = xi[i] - y[i] - tail[i];
      s += r * r;
    }
    return std::sqrt(s / n2);
  };
  out[static_cast<std::size_t>(L)] = norm_of(samples(Y.fields[0], scaled_displacement(path, L, nu)));
  for (int j = L - 1; j >= 0; --j) {
    const ScalarField& w = Y.fields[static_cast<std::size_t>(L - j)];
    const Vec2 shift = scaled_displacement(path, j, nu);
    if (!w.is_zero()) {
      const VectorField z = gradient(w);
      const VectorField u = apply_K(w.projected_mean_zero());
      const auto z1 = samples(z.c1, shift);
      const auto z2 = samples(z.c2, shift);
      const auto u1 = samples(u.c1, shift);
      const auto u2 = samples(u.c2, shift);
      const Vec2 dB = path.increments[static_cast<std::size_t>(j)];
      for (std::size_t i = 0; i < n2; ++i)
        tail[i] += (z1[i] * u1[i] + z2[i] * u2[i]) * Y.dt + sigma * (z1[i] * dB.x1 + z2[i] * dB.x2);
    }
    out[static_cast<std::size_t>(j)] = norm_of(samples(w, shift));
  }
  return out;
}

double bsde_residual(const BsdeSolution& solution, const BrownianPath& path) {
  const auto p = bsde_residual_profile(solution.Y, solution.psi, path, solution.config.nu);
  return *std::max_element(p.begin(), p.end());
}

}  // namespace vbsde

#pragma once

#include <span>
#include <string>
#include <vector>

#include "vbsde/bsde_engine.hpp"

namespace vbsde {

inline constexpr int kReportSchemaVersion = 1;

/// Margin of one iterate: C1 + eps_MC - sup|omega_n|.
struct IterateBound {
  double sup_abs = 0.0;
  double mc_tolerance = 0.0;
};

struct MaxPrincipleReport {
  double margin = 0.0;  // minimum over iterates
  bool pass = false;
  std::vector<double> margins;
};

MaxPrincipleReport max_principle_check(std::span<const IterateBound> iterates, double C1);
MaxPrincipleReport max_principle_check(const BsdeSolution& solution, double C1);

/// (C1 / nu) sqrt(nu + T C0 C1^2).
double z_bmo_bound(double C1, double C0, double nu, double T);

struct BmoEstimate {
  double squared = 0.0;     // max_t E[int_t^T ||Z_s||^2 ds | F_t]
  double squared_se = 0.0;  // jackknife over branch batches
  double value = 0.0;       // sqrt(squared)
  double se = 0.0;
};

/// Proxy for ||Z||_BMO of an iterate along `paths` outer paths drawn from
/// seed. The tail integrals use the trapezoid rule on the node grid.
BmoEstimate z_bmo_proxy(const PicardIterate& it, double nu, int paths, std::uint64_t seed);

struct ZBmoReport {
  BmoEstimate measured;
  double bound = 0.0;
  bool pass = false;  // measured - 3 SE <= bound
};

ZBmoReport z_bmo_check(const BsdeSolution& solution);

enum class ContractionStatus { pass, fail, inconclusive };
std::string to_string(ContractionStatus s);

struct ContractionReport {
  ContractionStatus status = ContractionStatus::inconclusive;
  std::vector<double> counted;   // ratios above the noise floor
  bool strictly_decreasing = false;
  bool half_factor_ok = false;   // every counted ratio <= 0.5 + allowance
};

/// Allowances are per-ratio noise margins (may be empty: zero).
ContractionReport contraction_check(const std::vector<double>& ratios,
                                    const std::vector<bool>& above_noise,
                                    const std::vector<double>& allowances = {});
ContractionReport contraction_check(const BsdeSolution& solution);

/// Full JSON report of a solution: max principle, BMO bound, contraction,
/// alpha and constants.
std::string diagnostics_report(const BsdeSolution& solution);

}  // namespace vbsde

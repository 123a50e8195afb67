#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "vbsde/bsde_engine.hpp"

namespace vbsde {

inline constexpr int kBundleSchemaVersion = 1;

/// Sampling statistics ("VBST"), little-endian:
///
///   0   4  magic "VBST"
///   4   2  version (u16, 1)
///   6   4  L (u32)
///   10  2  N (u16)
///   12  4  branches (u32)
///   16  4  batches G (u32)
///   20     pooled_se[L+1], max_se[L+1] (f64)
///          then per node m: u8 present flag, and if set G*N*N f64 batch means
void write_stats(std::ostream& out, const SamplingStats& stats, int n);
SamplingStats read_stats(std::istream& in);

/// A solution bundle is a directory holding
///   solution.json  config echo, constants, iteration history (no timings)
///   psi.vbsf       terminal data
///   Y.vbtr         node fields of the final iterate
///   stats.vbst     its sampling statistics (absent for exact iterates)
/// Returns the file names written, in a fixed order.
std::vector<std::string> save_bundle(const std::filesystem::path& dir, const BsdeSolution& solution);
BsdeSolution load_bundle(const std::filesystem::path& dir);

/// solution.json contents, also used as the config echo of a solve.
std::string solution_json(const BsdeSolution& solution);

}  // namespace vbsde

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vbsde/bsde_engine.hpp"
#include "vbsde/torus_field.hpp"

namespace vbsde::cli {

/// Flat "key = value" configuration. '#' starts a comment; blank lines are
/// ignored; keys are case-sensitive and may appear once. Errors carry the
/// file name and line number.
class RunConfig {
 public:
  static RunConfig parse(const std::string& text, const std::string& origin = "<config>");
  /// Reads `path`; a relative path that does not exist is retried under
  /// $VBSDE_CONFIG_DIR.
  static RunConfig load(const std::filesystem::path& path);

  const std::filesystem::path& source() const noexcept { return source_; }
  const std::string& text() const noexcept { return text_; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }

  std::optional<std::string> string(const std::string& key) const;
  std::optional<long long> integer(const std::string& key) const;
  std::optional<std::uint64_t> unsigned_integer(const std::string& key) const;
  std::optional<double> number(const std::string& key) const;
  std::optional<bool> boolean(const std::string& key) const;

  template <typename T>
  T require(const std::optional<T>& v, const std::string& key) const {
    if (!v) throw_missing(key);
    return *v;
  }

  /// Input files named in the config are resolved against its directory.
  std::filesystem::path input_path(const std::string& key) const;
  /// output_dir, relative to the working directory; default "vbsde_out".
  std::filesystem::path output_dir() const;

 private:
  [[noreturn]] void throw_missing(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

  std::filesystem::path source_;
  std::string origin_;
  std::string text_;
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
};

/// Parses sums of Fourier modes such as "1.0*sin(1,0) + 0.5*cos(1,1)" or
/// "0". Modes must be resolved: 0 < max(|k1|, |k2|) < N/2.
ScalarField parse_psi(const std::string& expr, int n);

/// Terminal data from either `psi` or `psi_file` (exactly one).
ScalarField load_psi(const RunConfig& cfg, int n);

/// Solver settings with SolverConfig defaults for absent keys.
SolverConfig solver_config(const RunConfig& cfg);

}  // namespace vbsde::cli

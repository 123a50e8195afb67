#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

namespace vbsde::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kNumerical = 3,
  kNonConvergence = 4,
};

/// Runs one subcommand ("oracle", "solve", "compare", "diagnose") and writes
/// its manifest, also on failure. Progress and errors go to `log`.
int run_command(const std::string& command, const std::filesystem::path& config_path, std::ostream& log);

}  // namespace vbsde::cli

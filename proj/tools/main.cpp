#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"vbsde: Monte Carlo BSDE solver for 2D periodic vorticity"};
  app.set_version_flag("--version", "vbsde 0.1.0");
  app.require_subcommand(1, 1);
  std::string config;
  const std::pair<const char*, const char*> commands[] = {
      {"oracle", "evolve the spectral reference solution and write trajectory.vbtr + oracle.csv"},
      {"solve", "run the Picard iteration and write a solution bundle + diagnostics.json"},
      {"compare", "pathwise L2 comparison of a solution against a reference trajectory"},
      {"diagnose", "recompute the diagnostics report of a solution bundle"},
  };
  for (const auto& [name, help] : commands)
    app.add_subcommand(name, help)->add_option("config", config, "configuration file")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : vbsde::cli::kConfig;
  }
  return vbsde::cli::run_command(app.get_subcommands().front()->get_name(), config, std::cerr);
}

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vbsde::cli {

inline constexpr int kManifestSchemaVersion = 1;

/// Lowercase hex digests.
std::string sha256_hex(const std::string& bytes);
/// Git blob id: SHA-1 of "blob <size>\0" followed by the content.
std::string git_blob_hash(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

/// Run record written next to every command's outputs, including failed
/// runs.
class Manifest {
 public:
  Manifest(std::string command, std::filesystem::path output_dir);

  void set_config(const std::string& text, const nlohmann::json& echo);
  void add_input(const std::string& role, const std::filesystem::path& path);
  void add_output(const std::string& name);
  void time_phase(const std::string& phase, double seconds);
  void set_status(const std::string& status, int exit_code, const std::string& message = {});
  nlohmann::json& extra() { return extra_; }
  const std::filesystem::path& output_dir() const noexcept { return dir_; }
  void set_output_dir(std::filesystem::path dir) { dir_ = std::move(dir); }

  /// Writes <output_dir>/manifest.json; never throws.
  bool write() const noexcept;

 private:
  std::string command_;
  std::filesystem::path dir_;
  std::string config_hash_;
  nlohmann::json config_echo_ = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> inputs_;  // role, blob hash
  nlohmann::json input_files_ = nlohmann::json::array();
  std::vector<std::string> outputs_;
  nlohmann::json timings_ = nlohmann::json::object();
  nlohmann::json extra_ = nlohmann::json::object();
  std::string status_ = "running";
  int exit_code_ = -1;
  std::string message_;
};

}  // namespace vbsde::cli

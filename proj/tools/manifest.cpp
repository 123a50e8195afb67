#include "manifest.hpp"

#include <array>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "vbsde/errors.hpp"

namespace vbsde::cli {
namespace {

std::string digest(const EVP_MD* md, const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, md, nullptr) != 1)
    throw std::runtime_error("digest computation failed");
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(out[i]);
  return s.str();
}

}  // namespace

std::string sha256_hex(const std::string& bytes) { return digest(EVP_sha256(), bytes); }

std::string git_blob_hash(const std::string& bytes) {
  std::string framed = "blob " + std::to_string(bytes.size());
  framed.push_back('\0');
  framed += bytes;
  return digest(EVP_sha1(), framed);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Manifest::Manifest(std::string command, std::filesystem::path output_dir)
    : command_(std::move(command)), dir_(std::move(output_dir)) {}

void Manifest::set_config(const std::string& text, const nlohmann::json& echo) {
  config_hash_ = git_blob_hash(text);
  config_echo_ = echo;
}

void Manifest::add_input(const std::string& role, const std::filesystem::path& path) {
  const std::string h = git_blob_hash(read_file(path));
  inputs_.emplace_back(role, h);
  input_files_.push_back({{"role", role}, {"path", path.string()}, {"blob", h}});
}

void Manifest::add_output(const std::string& name) { outputs_.push_back(name); }

void Manifest::time_phase(const std::string& phase, double seconds) { timings_[phase] = seconds; }

void Manifest::set_status(const std::string& status, int exit_code, const std::string& message) {
  status_ = status;
  exit_code_ = exit_code;
  message_ = message;
}

bool Manifest::write() const noexcept {
  try {
    using nlohmann::json;
    // The input hash covers the config text and every input file, keyed by
    // role, so it is independent of where the inputs live.
    std::string listing = "config " + config_hash_ + "\n";
    for (const auto& [role, h] : inputs_) listing += role + " " + h + "\n";
    json j;
    j["schema_version"] = kManifestSchemaVersion;
    j["command"] = command_;
    j["status"] = status_;
    j["exit_code"] = exit_code_;
    if (!message_.empty()) j["message"] = message_;
    j["config"] = config_echo_;
    j["config_blob"] = config_hash_;
    j["inputs"] = input_files_;
    j["input_hash"] = git_blob_hash(listing);
    j["timings_seconds"] = timings_;
    json outs = json::array();
    for (const auto& name : outputs_) {
      const std::string bytes = read_file(dir_ / name);
      outs.push_back({{"file", name}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}});
    }
    j["outputs"] = outs;
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    std::filesystem::create_directories(dir_);
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << j.dump(2) << '\n';
    return static_cast<bool>(out);
  } catch (...) {
    return false;
  }
}

}  // namespace vbsde::cli

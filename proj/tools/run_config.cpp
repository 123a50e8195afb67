#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "vbsde/errors.hpp"
#include "vbsde/field_io.hpp"

namespace vbsde::cli {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "N",          "L",         "M_outer",   "M_inner",    "nu",
      "T",          "alpha",     "picard_tol", "picard_tol_floor_multiple",
      "max_iter",   "base_seed", "workers",   "control_variate", "batches",
      "oversample", "psi",       "psi_file",  "output_dir", "solution",
      "trajectory", "paths"};
  return keys;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

template <typename T>
bool parse_whole(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

// Recursive-descent reader for the psi grammar.
class PsiParser {
 public:
  PsiParser(const std::string& s, int n) : s_(s), n_(n), out_(n) {}

  ScalarField run() {
    skip();
    if (at_end()) fail("empty expression");
    double sign = read_sign(true);
    term(sign);
    for (;;) {
      skip();
      if (at_end()) break;
      sign = read_sign(false);
      term(sign);
    }
    return out_;
  }

 private:
  void term(double sign) {
    skip();
    double coef = 1.0;
    if (!starts_with("sin") && !starts_with("cos")) {
      coef = read_number();
      skip();
      if (at_end() || s_[i_] != '*') {
        if (coef != 0.0) fail("a bare constant must be 0 (psi is mean-zero)");
        return;
      }
      ++i_;
      skip();
    }
    const bool is_sin = starts_with("sin");
    if (!is_sin && !starts_with("cos")) fail("expected sin(k1,k2) or cos(k1,k2)");
    i_ += 3;
    expect('(');
    const int k1 = read_int();
    expect(',');
    const int k2 = read_int();
    expect(')');
    const int m = std::max(std::abs(k1), std::abs(k2));
    if (m == 0) fail(is_sin ? "sin(0,0) is identically zero" : "cos(0,0) has nonzero mean");
    if (2 * m >= n_)
      fail("mode (" + std::to_string(k1) + "," + std::to_string(k2) + ") is not resolved on N = " +
           std::to_string(n_));
    const double a = sign * coef;
    out_ += is_sin ? ScalarField::sine(n_, k1, k2, a) : ScalarField::cosine(n_, k1, k2, a);
  }

  double read_sign(bool optional) {
    skip();
    if (!at_end() && (s_[i_] == '+' || s_[i_] == '-')) return s_[i_++] == '-' ? -1.0 : 1.0;
    if (!optional) fail("expected '+' or '-'");
    return 1.0;
  }

  double read_number() {
    const std::size_t start = i_;
    while (!at_end() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.' ||
                         s_[i_] == 'e' || s_[i_] == 'E' ||
                         ((s_[i_] == '+' || s_[i_] == '-') && i_ > start &&
                          (s_[i_ - 1] == 'e' || s_[i_ - 1] == 'E'))))
      ++i_;
    double v = 0.0;
    if (i_ == start || !parse_whole(s_.substr(start, i_ - start), v)) {
      i_ = start;
      fail("expected a number");
    }
    return v;
  }

  int read_int() {
    skip();
    const std::size_t start = i_;
    if (!at_end() && (s_[i_] == '-' || s_[i_] == '+')) ++i_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    int v = 0;
    std::string t = s_.substr(start, i_ - start);
    if (!t.empty() && t[0] == '+') t.erase(0, 1);
    if (!parse_whole(t, v)) {
      i_ = start;
      fail("expected an integer wavenumber");
    }
    skip();
    return v;
  }

  void expect(char c) {
    skip();
    if (at_end() || s_[i_] != c) fail(std::string("expected '") + c + "'");
    ++i_;
    skip();
  }

  bool starts_with(const char* w) const { return s_.compare(i_, 3, w) == 0; }
  bool at_end() const { return i_ >= s_.size(); }
  void skip() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("psi: " + what + " at column " + std::to_string(i_ + 1) + " in '" + s_ + "'");
  }

  const std::string& s_;
  int n_;
  std::size_t i_ = 0;
  ScalarField out_;
};

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::string& origin) {
  RunConfig c;
  c.origin_ = origin;
  c.text_ = text;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = origin + ":" + std::to_string(number) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (!known_keys().count(key)) throw ConfigError(where + "unknown key '" + key + "'");
    if (c.values_.count(key))
      throw ConfigError(where + "duplicate key '" + key + "' (first set on line " +
                        std::to_string(c.lines_[key]) + ")");
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    c.values_[key] = value;
    c.lines_[key] = number;
    c.entries_.emplace_back(key, value);
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  if (!std::filesystem::exists(p) && p.is_relative()) {
    if (const char* dir = std::getenv("VBSDE_CONFIG_DIR"); dir && *dir) {
      const std::filesystem::path alt = std::filesystem::path(dir) / p;
      if (std::filesystem::exists(alt)) p = alt;
    }
  }
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  RunConfig c = parse(s.str(), p.filename().string());
  c.source_ = p;
  return c;
}

void RunConfig::throw_missing(const std::string& key) const {
  throw ConfigError(origin_ + ": missing required key '" + key + "'");
}

void RunConfig::fail(const std::string& key, const std::string& message) const {
  throw ConfigError(origin_ + ":" + std::to_string(lines_.at(key)) + ": " + key + ": " + message);
}

std::optional<std::string> RunConfig::string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<long long> RunConfig::integer(const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  long long v = 0;
  if (!parse_whole(*s, v)) fail(key, "expected an integer, got '" + *s + "'");
  return v;
}

std::optional<std::uint64_t> RunConfig::unsigned_integer(const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  std::uint64_t v = 0;
  if (!parse_whole(*s, v)) fail(key, "expected a non-negative integer, got '" + *s + "'");
  return v;
}

std::optional<double> RunConfig::number(const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  double v = 0.0;
  if (!parse_whole(*s, v)) fail(key, "expected a number, got '" + *s + "'");
  return v;
}

std::optional<bool> RunConfig::boolean(const std::string& key) const {
  const auto s = string(key);
  if (!s) return std::nullopt;
  if (*s == "true" || *s == "1" || *s == "yes") return true;
  if (*s == "false" || *s == "0" || *s == "no") return false;
  fail(key, "expected true or false, got '" + *s + "'");
}

std::filesystem::path RunConfig::input_path(const std::string& key) const {
  const std::filesystem::path p = require(string(key), key);
  if (p.is_absolute() || source_.empty()) return p;
  return source_.parent_path() / p;
}

std::filesystem::path RunConfig::output_dir() const { return string("output_dir").value_or("vbsde_out"); }

ScalarField parse_psi(const std::string& expr, int n) {
  validate_grid_size(n);
  return PsiParser(expr, n).run();
}

ScalarField load_psi(const RunConfig& cfg, int n) {
  if (cfg.has("psi") == cfg.has("psi_file"))
    throw ConfigError("exactly one of 'psi' and 'psi_file' must be set");
  if (cfg.has("psi")) return parse_psi(*cfg.string("psi"), n);
  ScalarField f = load_field(cfg.input_path("psi_file"));
  if (f.grid_size() != n)
    throw ConfigError("psi_file grid size " + std::to_string(f.grid_size()) + " does not match N = " +
                      std::to_string(n));
  if (std::abs(f.modes()[0]) != 0.0) throw ConfigError("psi_file holds a field with nonzero mean");
  if (f.has_nyquist_content()) throw ConfigError("psi_file has content on unresolved Nyquist modes");
  return f.projected_mean_zero();
}

SolverConfig solver_config(const RunConfig& cfg) {
  SolverConfig c;
  auto as_int = [&](const char* key, int& slot) {
    if (const auto v = cfg.integer(key)) {
      if (*v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max())
        throw ConfigError(std::string(key) + " is out of range");
      slot = static_cast<int>(*v);
    }
  };
  as_int("N", c.N);
  as_int("L", c.L);
  as_int("M_outer", c.M_outer);
  as_int("M_inner", c.M_inner);
  as_int("max_iter", c.max_iter);
  as_int("workers", c.workers);
  as_int("batches", c.batches);
  as_int("oversample", c.oversample);
  if (const auto v = cfg.number("nu")) c.nu = *v;
  if (const auto v = cfg.number("T")) c.T = *v;
  if (const auto s = cfg.string("alpha"); s && *s != "auto") c.alpha = cfg.number("alpha");
  if (const auto v = cfg.number("picard_tol")) c.picard_tol = *v;
  if (const auto s = cfg.string("picard_tol_floor_multiple"); s && *s != "none")
    c.picard_tol_floor_multiple = cfg.number("picard_tol_floor_multiple");
  if (const auto v = cfg.unsigned_integer("base_seed")) c.base_seed = *v;
  if (const auto v = cfg.boolean("control_variate")) c.control_variate = *v;
  c.validate();
  return c;
}

}  // namespace vbsde::cli

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bsnse/engine/solver.hpp"
#include "json.hpp"

namespace bsnse {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& key) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("config: " + key + " = '" + std::string(s) + "' is not a number");
  return v;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class Int>
Int parse_int(std::string_view s, const std::string& key) {
  Int v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("config: " + key + " = '" + std::string(s) + "' is not an integer");
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Flat `key = value` configuration. Every key has a default; the resolved map
/// (defaults included) is what a manifest records.
class Config {
 public:
  Config() : values_(defaults()) {}

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> d = {
        {"grid.period", format_double(2.0 * std::numbers::pi)},
        {"grid.K", "4"},
        {"solver.nu", "1"},
        {"solver.T", "1"},
        {"solver.L", "64"},
        {"solver.M", "1000"},
        {"solver.basis_degree", "4"},
        {"solver.picard_iters", "3"},
        {"solver.picard_tol", "1e-10"},
        {"solver.lambda_bar_sq", "2"},
        {"solver.seed", "1"},
        {"sigma.x", "0"},
        {"sigma.y", "0"},
        {"sigma.osc_x", "0"},
        {"sigma.osc_y", "0"},
        {"forcing.kind", "zero"},
        {"forcing.a0_amp", "0"},
        {"forcing.a0_kx", "1"},
        {"forcing.a0_ky", "0"},
        {"forcing.a0_omega", "0"},
        {"forcing.a1", "0"},
        {"forcing.a2", "0"},
        {"forcing.c1", "0"},
        {"forcing.c2", "0"},
        {"forcing.n0", "1"},
        {"terminal.modes", "1,0:1"},
        {"terminal.psi", "one"},
        {"terminal.psi_amp", "0.5"},
        {"truncation.enabled", "false"},
        {"truncation.M", "10"},
        {"truncation.n", "10"},
        {"truncation.h_M_samples", "1000"},
        {"invariants.K", "5"},
        {"invariants.samples", "1000"},
        {"estimates.samples", "1000"},
        {"reversal.levels", "64,128,256"},
        {"uniqueness.seed_b", "2"},
        {"uniqueness.eval_seed", "3"},
        {"uniqueness.eval_M", "1000"},
        {"output.slice_node", "0"},
        {"output.slice_paths", "0"},
    };
    return d;
  }

  static std::string valid_keys() {
    std::string s;
    for (const auto& [k, v] : defaults()) s += (s.empty() ? "" : ", ") + k;
    return s;
  }

  /// Parses `key = value` lines; `#` starts a comment. Unknown or repeated keys are errors.
  static Config parse(std::istream& in, const std::string& origin = "<config>") {
    Config c;
    std::map<std::string, int> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view v = line;
      if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
      v = detail::trim(v);
      if (v.empty()) continue;
      const auto eq = v.find('=');
      if (eq == std::string_view::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key(detail::trim(v.substr(0, eq)));
      const std::string val(detail::trim(v.substr(eq + 1)));
      if (seen.count(key))
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": key '" + key + "' repeated (first on line " +
                          std::to_string(seen[key]) + ")");
      seen[key] = lineno;
      c.set(key, val);
    }
    return c;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  /// Reads a config file, or the `config` object of a run manifest when the
  /// file holds JSON.
  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
      }
      if (!j.contains("config") || !j["config"].is_object()) throw ConfigError(path + ": manifest has no config object");
      Config c;
      for (const auto& [k, v] : j["config"].items()) {
        if (!v.is_string()) throw ConfigError(path + ": config value for '" + k + "' must be a string");
        c.set(k, v.get<std::string>());
      }
      return c;
    }
    std::istringstream in2(text);
    return parse(in2, path);
  }

  void set(const std::string& key, const std::string& value) {
    if (!defaults().count(key)) throw ConfigError("unknown config key '" + key + "'; valid keys: " + valid_keys());
    values_[key] = value;
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
  }
  double num(const std::string& key) const { return parse_double(str(key), key); }
  int integer(const std::string& key) const { return detail::parse_int<int>(str(key), key); }
  std::uint64_t u64(const std::string& key) const { return detail::parse_int<std::uint64_t>(str(key), key); }
  std::size_t count(const std::string& key) const {
    const auto v = detail::parse_int<long long>(str(key), key);
    if (v < 0) throw ConfigError("config: " + key + " must be nonnegative");
    return static_cast<std::size_t>(v);
  }
  bool flag(const std::string& key) const {
    const auto& s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config: " + key + " = '" + s + "' is not a boolean");
  }
  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    for (auto part : detail::split(str(key), ',')) out.push_back(detail::parse_int<int>(part, key));
    return out;
  }

  /// The resolved values as `key = value` lines, readable by parse().
  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  std::map<std::string, std::string> values_;
};

/// Everything a run needs, resolved from a Config.
struct Problem {
  SolverConfig solver;
  ModeSetPtr modes;
  ForcingModel model;
  SigmaSchedule sigma;
  TerminalCondition terminal;
};

/// "kx,ky:amp; kx,ky:amp"
inline std::vector<ModeAmplitude> parse_mode_list(const std::string& s, const std::string& key) {
  std::vector<ModeAmplitude> out;
  for (auto entry : detail::split(s, ';')) {
    if (entry.empty()) continue;
    const auto colon = entry.find(':');
    if (colon == std::string_view::npos) throw ConfigError("config: " + key + " entries look like 'kx,ky:amp'");
    const auto k = detail::split(entry.substr(0, colon), ',');
    if (k.size() != 2) throw ConfigError("config: " + key + " entries look like 'kx,ky:amp'");
    out.push_back({{detail::parse_int<int>(k[0], key), detail::parse_int<int>(k[1], key)},
                   parse_double(detail::trim(entry.substr(colon + 1)), key)});
  }
  return out;
}

inline ForcingKind parse_forcing_kind(const std::string& s) {
  if (s == "zero") return ForcingKind::zero;
  if (s == "linear") return ForcingKind::linear;
  if (s == "saturated") return ForcingKind::saturated;
  throw ConfigError("config: forcing.kind must be zero, linear or saturated (got '" + s + "')");
}

inline Problem resolve_problem(const Config& c) {
  Problem p;
  auto& s = p.solver;
  s.period = c.num("grid.period");
  s.K = c.integer("grid.K");
  s.nu = c.num("solver.nu");
  s.T = c.num("solver.T");
  s.L = c.integer("solver.L");
  s.M = c.count("solver.M");
  s.basis_degree = c.integer("solver.basis_degree");
  s.picard_iters = c.integer("solver.picard_iters");
  s.picard_tol = c.num("solver.picard_tol");
  s.lambda_bar_sq = c.num("solver.lambda_bar_sq");
  s.seed = c.u64("solver.seed");
  s.truncation.enabled = c.flag("truncation.enabled");
  s.truncation.M = c.num("truncation.M");
  s.truncation.n = c.num("truncation.n");
  s.h_M_samples = c.count("truncation.h_M_samples");
  detail::check_config(s);
  if (!(s.period > 0.0)) throw ConfigError("grid.period must be positive");

  p.sigma = SigmaSchedule{{c.num("sigma.x"), c.num("sigma.y")}, {c.num("sigma.osc_x"), c.num("sigma.osc_y")}, s.T};

  ForcingParams fp;
  fp.kind = parse_forcing_kind(c.str("forcing.kind"));
  fp.a0_amp = c.num("forcing.a0_amp");
  fp.a0_mode = {c.integer("forcing.a0_kx"), c.integer("forcing.a0_ky")};
  fp.a0_omega = c.num("forcing.a0_omega");
  fp.a1 = c.num("forcing.a1");
  fp.a2 = c.num("forcing.a2");
  fp.c1 = c.num("forcing.c1");
  fp.c2 = c.num("forcing.c2");
  fp.n0 = c.num("forcing.n0");
  p.model = ForcingModel(fp, s.T, s.period);

  p.modes = ModeSet::box(s.period, s.K);
  p.terminal.xi0 = shear_modes(p.modes, parse_mode_list(c.str("terminal.modes"), "terminal.modes"));
  const auto& psi = c.str("terminal.psi");
  if (psi == "one") p.terminal.psi_kind = PsiKind::one;
  else if (psi == "tanh") p.terminal.psi_kind = PsiKind::tanh;
  else throw ConfigError("config: terminal.psi must be one or tanh (got '" + psi + "')");
  p.terminal.psi_amp = c.num("terminal.psi_amp");
  return p;
}

/// Throws AdmissibilityError when the super-parabolicity margin is not positive.
inline double admissibility_gate(const Problem& p) {
  const double margin = superparabolicity_margin(p.solver.nu, p.solver.lambda_bar_sq, p.sigma);
  if (!(margin > 0.0)) {
    std::ostringstream os;
    os << "inadmissible configuration: super-parabolicity margin " << margin << " <= 0 (nu=" << p.solver.nu
       << ", lambda_bar^2=" << p.solver.lambda_bar_sq << ", sup|sigma|^2=" << p.sigma.sup_norm2() << ")";
    throw AdmissibilityError(os.str(), margin);
  }
  return margin;
}

}  // namespace bsnse

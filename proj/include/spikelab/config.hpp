#pragma once

// Run configuration: plain-text `key = value` lines with dotted sections.
// Parsing is strict (unknown keys are errors), serialization is canonical
// (sorted keys, shortest round-trip float formatting) so that
// parse -> serialize -> parse is the identity and the serialized form can be
// hashed for cache keys and run ids.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spikelab/entire.hpp"
#include "spikelab/errors.hpp"
#include "spikelab/exponents.hpp"
#include "spikelab/metric.hpp"

namespace spikelab {

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + s + "'");
  }
}

inline long parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for " + key + ": '" + s + "'");
  }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("config: bad boolean value for " + key + ": '" + s + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace detail

struct RunConfig {
  // exponents
  double p = 3, q = 3;
  int N = 3;
  // metric
  std::string metric_kind = "flat";
  double L = 10.0;
  int grid = 32;                 // nodes per axis
  double amplitude = 0;          // constant value / cosine amplitude / bump amplitude
  std::vector<int> mode;         // cosine mode vector (defaults to (1,0,...))
  std::vector<double> center;    // bump center (defaults to box center)
  double sharpness = 0;          // bump sharpness s in exp(-s r^2)
  // eps schedule: explicit list wins; otherwise eps_k = L/(10*2^{k/2}) for k in [k_min, k_max]
  std::vector<double> eps_list;
  int eps_k_min = 0, eps_k_max = 2;
  // perturbed solver
  double solver_tol = 1e-10;
  int max_newton = 40;
  int max_krylov = 500;
  // entire solver
  double entire_R_max = 20.0;
  int entire_M = 2000;
  double entire_tol = 1e-10;
  // seeding
  std::string seeds_mode = "argmax";  // argmax | argmax_opposite | explicit
  std::vector<std::vector<double>> seed_points;
  // transplant cutoff (0 -> 0.45 L)
  double cutoff_R = 0;
  // checks
  bool check_duality = true;
  double duality_tol = 1e-8;
  bool check_decay = true;
  bool check_energy_limit = false;
  double energy_limit_tol = 0.02;
  bool check_expansion = false;
  bool check_concentration = false;
  // output
  std::string out_dir = "out";
  std::string run_id;  // empty -> derived from config hash

  ExponentPair exponents() const { return ExponentPair(p, q, N); }

  std::vector<double> epsilons() const {
    if (!eps_list.empty()) return eps_list;
    std::vector<double> es;
    for (int k = eps_k_min; k <= eps_k_max; ++k) es.push_back(L / (10.0 * std::pow(2.0, 0.5 * k)));
    return es;
  }

  double cutoff() const { return cutoff_R > 0 ? cutoff_R : 0.45 * L; }

  ConformalMetric make_metric() const {
    Shape shape(static_cast<std::size_t>(N), grid);
    if (metric_kind == "flat") return ConformalMetric::flat(N, L, shape);
    if (metric_kind == "constant") return ConformalMetric::constant(N, L, shape, amplitude);
    if (metric_kind == "cosine") {
      std::vector<int> mv = mode;
      if (mv.empty()) {
        mv.assign(static_cast<std::size_t>(N), 0);
        mv[0] = 1;
      }
      return ConformalMetric::cosine(N, L, shape, amplitude, mv);
    }
    if (metric_kind == "bump") {
      std::vector<double> c = center;
      if (c.empty()) c.assign(static_cast<std::size_t>(N), 0.5 * L);
      return ConformalMetric::bump(N, L, shape, amplitude, sharpness, c);
    }
    throw ConfigError("config: unknown metric.kind '" + metric_kind + "'");
  }
};

inline RunConfig parse_config_text(const std::string& text) {
  RunConfig c;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
    std::string key = detail::trim(t.substr(0, eq));
    std::string val = detail::trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
    if (kv.count(key)) throw ConfigError("config: duplicate key " + key);
    kv[key] = val;
  }

  auto take = [&](const std::string& key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    return &it->second;
  };

  if (auto* v = take("exponents.p")) c.p = detail::parse_double(*v, "exponents.p");
  if (auto* v = take("exponents.q")) c.q = detail::parse_double(*v, "exponents.q");
  if (auto* v = take("exponents.N")) c.N = static_cast<int>(detail::parse_int(*v, "exponents.N"));
  if (auto* v = take("metric.kind")) c.metric_kind = *v;
  if (auto* v = take("metric.L")) c.L = detail::parse_double(*v, "metric.L");
  if (auto* v = take("metric.grid")) c.grid = static_cast<int>(detail::parse_int(*v, "metric.grid"));
  if (auto* v = take("metric.N")) {
    int mn = static_cast<int>(detail::parse_int(*v, "metric.N"));
    if (take("exponents.N") && mn != c.N)
      throw ConfigError("config: metric.N disagrees with exponents.N");
    c.N = mn;
  }
  if (auto* v = take("metric.amplitude")) c.amplitude = detail::parse_double(*v, "metric.amplitude");
  if (auto* v = take("metric.mode")) {
    c.mode.clear();
    for (const auto& s : detail::split(*v, ','))
      c.mode.push_back(static_cast<int>(detail::parse_int(detail::trim(s), "metric.mode")));
  }
  if (auto* v = take("metric.center")) {
    c.center.clear();
    for (const auto& s : detail::split(*v, ','))
      c.center.push_back(detail::parse_double(detail::trim(s), "metric.center"));
  }
  if (auto* v = take("metric.sharpness")) c.sharpness = detail::parse_double(*v, "metric.sharpness");
  if (auto* v = take("eps.list")) {
    c.eps_list.clear();
    for (const auto& s : detail::split(*v, ','))
      c.eps_list.push_back(detail::parse_double(detail::trim(s), "eps.list"));
  }
  if (auto* v = take("eps.k_min")) c.eps_k_min = static_cast<int>(detail::parse_int(*v, "eps.k_min"));
  if (auto* v = take("eps.k_max")) c.eps_k_max = static_cast<int>(detail::parse_int(*v, "eps.k_max"));
  if (auto* v = take("solver.tol")) c.solver_tol = detail::parse_double(*v, "solver.tol");
  if (auto* v = take("solver.max_newton")) c.max_newton = static_cast<int>(detail::parse_int(*v, "solver.max_newton"));
  if (auto* v = take("solver.max_krylov")) c.max_krylov = static_cast<int>(detail::parse_int(*v, "solver.max_krylov"));
  if (auto* v = take("entire.R_max")) c.entire_R_max = detail::parse_double(*v, "entire.R_max");
  if (auto* v = take("entire.M")) c.entire_M = static_cast<int>(detail::parse_int(*v, "entire.M"));
  if (auto* v = take("entire.tol")) c.entire_tol = detail::parse_double(*v, "entire.tol");
  if (auto* v = take("seeds.mode")) c.seeds_mode = *v;
  if (auto* v = take("seeds.points")) {
    c.seed_points.clear();
    for (const auto& pt : detail::split(*v, ';')) {
      std::vector<double> coords;
      for (const auto& s : detail::split(pt, ','))
        coords.push_back(detail::parse_double(detail::trim(s), "seeds.points"));
      c.seed_points.push_back(coords);
    }
  }
  if (auto* v = take("transplant.R")) c.cutoff_R = detail::parse_double(*v, "transplant.R");
  if (auto* v = take("checks.duality")) c.check_duality = detail::parse_bool(*v, "checks.duality");
  if (auto* v = take("checks.duality_tol")) c.duality_tol = detail::parse_double(*v, "checks.duality_tol");
  if (auto* v = take("checks.decay")) c.check_decay = detail::parse_bool(*v, "checks.decay");
  if (auto* v = take("checks.energy_limit")) c.check_energy_limit = detail::parse_bool(*v, "checks.energy_limit");
  if (auto* v = take("checks.energy_limit_tol")) c.energy_limit_tol = detail::parse_double(*v, "checks.energy_limit_tol");
  if (auto* v = take("checks.expansion")) c.check_expansion = detail::parse_bool(*v, "checks.expansion");
  if (auto* v = take("checks.concentration")) c.check_concentration = detail::parse_bool(*v, "checks.concentration");
  if (auto* v = take("output.dir")) c.out_dir = *v;
  if (auto* v = take("run.id")) c.run_id = *v;

  static const char* known[] = {
      "exponents.p", "exponents.q", "exponents.N", "metric.kind", "metric.L", "metric.grid",
      "metric.N", "metric.amplitude", "metric.mode", "metric.center", "metric.sharpness",
      "eps.list", "eps.k_min", "eps.k_max", "solver.tol", "solver.max_newton", "solver.max_krylov",
      "entire.R_max", "entire.M", "entire.tol", "seeds.mode", "seeds.points", "transplant.R",
      "checks.duality", "checks.duality_tol", "checks.decay", "checks.energy_limit",
      "checks.energy_limit_tol", "checks.expansion", "checks.concentration", "output.dir", "run.id"};
  for (const auto& [key, val] : kv) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw ConfigError("config: unknown key " + key);
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Canonical form: every key, sorted, `key = value`, shortest float text.
inline std::string serialize_config(const RunConfig& c) {
  std::map<std::string, std::string> kv;
  auto fd = detail::format_double;
  kv["exponents.p"] = fd(c.p);
  kv["exponents.q"] = fd(c.q);
  kv["exponents.N"] = std::to_string(c.N);
  kv["metric.kind"] = c.metric_kind;
  kv["metric.L"] = fd(c.L);
  kv["metric.grid"] = std::to_string(c.grid);
  kv["metric.amplitude"] = fd(c.amplitude);
  {
    std::string s;
    for (std::size_t i = 0; i < c.mode.size(); ++i) s += (i ? "," : "") + std::to_string(c.mode[i]);
    kv["metric.mode"] = s;
  }
  {
    std::string s;
    for (std::size_t i = 0; i < c.center.size(); ++i) s += (i ? "," : "") + fd(c.center[i]);
    kv["metric.center"] = s;
  }
  kv["metric.sharpness"] = fd(c.sharpness);
  {
    std::string s;
    for (std::size_t i = 0; i < c.eps_list.size(); ++i) s += (i ? "," : "") + fd(c.eps_list[i]);
    kv["eps.list"] = s;
  }
  kv["eps.k_min"] = std::to_string(c.eps_k_min);
  kv["eps.k_max"] = std::to_string(c.eps_k_max);
  kv["solver.tol"] = fd(c.solver_tol);
  kv["solver.max_newton"] = std::to_string(c.max_newton);
  kv["solver.max_krylov"] = std::to_string(c.max_krylov);
  kv["entire.R_max"] = fd(c.entire_R_max);
  kv["entire.M"] = std::to_string(c.entire_M);
  kv["entire.tol"] = fd(c.entire_tol);
  kv["seeds.mode"] = c.seeds_mode;
  {
    std::string s;
    for (std::size_t i = 0; i < c.seed_points.size(); ++i) {
      if (i) s += ";";
      for (std::size_t j = 0; j < c.seed_points[i].size(); ++j)
        s += (j ? "," : "") + fd(c.seed_points[i][j]);
    }
    kv["seeds.points"] = s;
  }
  kv["transplant.R"] = fd(c.cutoff_R);
  kv["checks.duality"] = c.check_duality ? "true" : "false";
  kv["checks.duality_tol"] = fd(c.duality_tol);
  kv["checks.decay"] = c.check_decay ? "true" : "false";
  kv["checks.energy_limit"] = c.check_energy_limit ? "true" : "false";
  kv["checks.energy_limit_tol"] = fd(c.energy_limit_tol);
  kv["checks.expansion"] = c.check_expansion ? "true" : "false";
  kv["checks.concentration"] = c.check_concentration ? "true" : "false";
  kv["output.dir"] = c.out_dir;
  kv["run.id"] = c.run_id;

  std::string out;
  for (const auto& [k, v] : kv) {
    if (v.empty() && (k == "metric.mode" || k == "metric.center" || k == "eps.list" ||
                      k == "seeds.points" || k == "run.id"))
      continue;  // omit empty optional lists so round-trip stays the identity
    out += k + " = " + v + "\n";
  }
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  RunConfig canon = c;
  canon.run_id.clear();  // the id must not feed its own hash
  std::uint64_t h = fnv1a(serialize_config(canon));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string effective_run_id(const RunConfig& c) {
  return c.run_id.empty() ? "run-" + config_hash(c).substr(0, 12) : c.run_id;
}

// ---------------------------------------------------------------------------
struct ValidationReport {
  bool ok = true;
  bool hc_holds = false;
  double alpha = 0, beta = 0, beta_star = 0, alpha_star = 0;
  BootstrapTag bootstrap_tag = BootstrapTag::MaxIter;
  double q_limit = 0;
  double eps_min = 0;
  bool nyquist_ok = false;
  std::vector<std::string> messages;
};

// Structural validation: (HC), metric catalog parameters, and the resolution
// rule that the spike width 8*eps_min must span at least 8 grid nodes.
inline ValidationReport validate_config(const RunConfig& c) {
  ValidationReport r;
  ExponentPair e;  // placeholder; the checked constructor runs inside the try
  try {
    e = c.exponents();
  } catch (const std::exception& ex) {
    r.ok = false;
    r.messages.push_back(ex.what());
    return r;
  }
  r.hc_holds = e.hc_holds();
  r.alpha = e.alpha();
  r.beta = e.beta();
  r.beta_star = e.beta_star();
  r.alpha_star = e.alpha_star();
  BootstrapResult br = bootstrap_exponents(e);
  r.bootstrap_tag = br.tag;
  r.q_limit = br.q_limit;
  if (!r.hc_holds) {
    r.ok = false;
    std::ostringstream os;
    os << "subcriticality violated: 1/(p+1)+1/(q+1) = " << (1.0 / (e.p + 1) + 1.0 / (e.q + 1))
       << " must exceed (N-2)/N = " << (static_cast<double>(e.N) - 2) / e.N;
    r.messages.push_back(os.str());
  }
  try {
    (void)c.make_metric();
  } catch (const std::exception& ex) {
    r.ok = false;
    r.messages.push_back(ex.what());
  }
  std::vector<double> es = c.epsilons();
  if (es.empty()) {
    r.ok = false;
    r.messages.push_back("empty eps schedule");
  } else {
    for (std::size_t k = 1; k < es.size(); ++k)
      if (!(es[k] < es[k - 1])) {
        r.ok = false;
        r.messages.push_back("eps schedule must be strictly decreasing");
        break;
      }
    r.eps_min = es.back();
    double h = c.L / c.grid;
    r.nyquist_ok = static_cast<int>(std::floor(8.0 * r.eps_min / h)) + 1 >= 8;
    if (!r.nyquist_ok) {
      r.ok = false;
      std::ostringstream os;
      os << "grid too coarse for eps_min = " << r.eps_min << ": spike width 8*eps spans fewer than 8 nodes (h = " << h << ")";
      r.messages.push_back(os.str());
    }
  }
  if (c.seeds_mode != "argmax" && c.seeds_mode != "argmax_opposite" && c.seeds_mode != "explicit") {
    r.ok = false;
    r.messages.push_back("seeds.mode must be argmax, argmax_opposite, or explicit");
  }
  if (c.seeds_mode == "explicit") {
    if (c.seed_points.empty()) {
      r.ok = false;
      r.messages.push_back("seeds.mode=explicit requires seeds.points");
    }
    for (const auto& pt : c.seed_points)
      if (static_cast<int>(pt.size()) != c.N) {
        r.ok = false;
        r.messages.push_back("seed point dimension mismatch");
        break;
      }
  }
  if (!(c.entire_R_max >= 15.0) || c.entire_M < 400) {
    r.ok = false;
    r.messages.push_back("entire solver needs R_max >= 15 and M >= 400");
  }
  return r;
}

}  // namespace spikelab

#pragma once
/**
 * @brief Scenario files: a sectioned key = value text format, its typed form,
 *        cross-field validation and a checksum of the canonical serialization.
 *
 * The grammar is documented in docs/scenario_format.md.
 */
#include "evolution.hpp"
#include "expression.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace stripflow {

struct RawEntry {
  std::string value;
  int line = 0;
};

/// section -> key -> value, in the order sections are declared in a file.
using RawScenario = std::map<std::string, std::map<std::string, RawEntry>>;

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Collapses internal whitespace runs to a single space.
inline std::string normalize_value(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (c == ' ' || c == '\t') {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

inline RawScenario parse_raw(const std::string& text) {
  RawScenario raw;
  std::istringstream in(text);
  std::string line, section;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(ErrorKind::Schema, "line " + std::to_string(n) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw Error(ErrorKind::Schema, "line " + std::to_string(n) + ": empty section name");
      if (raw.count(section))
        throw Error(ErrorKind::Schema, "line " + std::to_string(n) + ": section '" + section + "' declared twice");
      raw[section];
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Schema, "line " + std::to_string(n) + ": expected key = value");
    if (section.empty())
      throw Error(ErrorKind::Schema, "line " + std::to_string(n) + ": key outside of any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = normalize_value(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Schema, "line " + std::to_string(n) + ": empty key");
    if (value.empty())
      throw Error(ErrorKind::Schema, "line " + std::to_string(n) + ": key '" + section + "." + key + "' has no value");
    if (raw[section].count(key))
      throw Error(ErrorKind::Schema, "line " + std::to_string(n) + ": key '" + section + "." + key + "' set twice");
    raw[section][key] = {value, n};
  }
  return raw;
}

inline const std::vector<std::string>& section_order() {
  static const std::vector<std::string> order{"space", "geometry", "initial", "solve", "time", "output", "diagnostics"};
  return order;
}

/// One "section.key = value" line per entry, sections in schema order, keys sorted.
inline std::string canonical_text(const RawScenario& raw) {
  std::ostringstream os;
  for (const auto& s : section_order()) {
    auto it = raw.find(s);
    if (it == raw.end()) continue;
    os << '[' << s << "]\n";
    for (const auto& [k, e] : it->second) os << k << " = " << e.value << '\n';
  }
  return os.str();
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct DiagnosticsConfig {
  std::vector<int> freeze_nodes{0};
  std::vector<double> deltas{1.0, 0.5, 0.25};
  double localization_t = 1.0;
  std::string direction = "cos(x) + 0.3*sin(3*x)";
  std::vector<double> coercivity_mus{1.0, 2.0, 4.0, 8.0};
  int ensemble = 4;
  std::uint64_t seed = 7;
};

struct ValidationReport {
  PositivityReport sectorial;
  EllipticityReport ellipticity;
  AdmissibilityReport admissibility;
  bool pass = false;
};

struct Scenario {
  std::string name;
  RawScenario raw;
  // space
  int m = 1;
  CMat A_entries;
  double phi = pi / 2, M = 2.0;
  // geometry
  double nu = 1.0, L = 2.0 * pi;
  int nx = 128, ny = 33;
  double alpha = 0.5, h_min = 0.0;
  // initial
  std::vector<std::string> g_source;  // per component, expression or table text
  CMat g0;
  // solve
  double mu_solve = 1.0, tol = 1e-12;
  // time
  EvolutionConfig time;
  // output
  std::string out_dir;
  int stride = 1;
  std::vector<std::string> formats{"csv", "json"};
  DiagnosticsConfig diagnostics;
  ValidationReport validation;

  std::string canonical() const { return canonical_text(raw); }
  std::string checksum() const { return hex64(fnv1a(canonical())); }
  SectorialOperator op() const { return SectorialOperator(A_entries, phi, M); }
  std::shared_ptr<const FourierAxis> axis() const { return fourier_axis(nx, L); }
  InterfaceProfile profile() const { return InterfaceProfile(nu, axis(), g0, h_min); }
  StripSolverOptions solver_options() const {
    StripSolverOptions o;
    o.ny = ny;
    o.tol = tol;
    return o;
  }
};

namespace detail {

class Reader {
 public:
  Reader(const RawScenario& raw, std::string section) : raw_(raw), section_(std::move(section)) {
    auto it = raw_.find(section_);
    if (it != raw_.end()) entries_ = &it->second;
  }

  bool present() const { return entries_ != nullptr; }
  bool has(const std::string& key) const { return entries_ && entries_->count(key); }

  const RawEntry& entry(const std::string& key) const {
    if (!has(key)) throw Error(ErrorKind::Schema, "missing key '" + section_ + "." + key + "'");
    used_.insert(key);
    return entries_->at(key);
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    int line = has(key) ? entries_->at(key).line : 0;
    throw Error(ErrorKind::Schema,
                (line ? "line " + std::to_string(line) + ": " : std::string()) + "key '" + section_ + "." + key + "' " + what);
  }

  Complex complex(const std::string& key) const {
    const RawEntry& e = entry(key);
    try {
      return Expression(e.value)(0.0);
    } catch (const Error& err) {
      fail(key, "is not a number: " + err.message());
    }
  }

  double real(const std::string& key) const {
    Complex z = complex(key);
    if (z.imag() != 0.0 || !std::isfinite(z.real())) fail(key, "must be a finite real number");
    return z.real();
  }

  double real(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }

  long long integer(const std::string& key) const {
    const std::string& v = entry(key).value;
    long long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) fail(key, "must be an integer");
    return out;
  }

  long long integer(const std::string& key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  std::string text(const std::string& key) const { return entry(key).value; }
  std::string text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

  std::vector<std::string> list(const std::string& key, char sep = ',') const {
    std::vector<std::string> out;
    std::stringstream ss(entry(key).value);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    return out;
  }

  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : list(key)) {
      try {
        Complex z = Expression(s)(0.0);
        if (z.imag() != 0.0 || !std::isfinite(z.real())) fail(key, "must list finite real numbers");
        out.push_back(z.real());
      } catch (const Error& err) {
        fail(key, "must list numbers: " + err.message());
      }
    }
    return out;
  }

  void reject_unknown() const {
    if (!entries_) return;
    for (const auto& [k, e] : *entries_)
      if (!used_.count(k))
        throw Error(ErrorKind::Schema, "line " + std::to_string(e.line) + ": unknown key '" + section_ + "." + k + "'");
  }

 private:
  const RawScenario& raw_;
  std::string section_;
  const std::map<std::string, RawEntry>* entries_ = nullptr;
  mutable std::set<std::string> used_;
};

inline std::string component_key(int m, int c) { return m == 1 ? "g" : "g" + std::to_string(c + 1); }

}  // namespace detail

/// Parses and type-checks a scenario without running the numerical validation.
inline Scenario parse_scenario(const std::string& text, const std::string& name = "scenario") {
  Scenario s;
  s.name = name;
  s.raw = parse_raw(text);
  for (const auto& [sec, entries] : s.raw) {
    (void)entries;
    if (std::find(section_order().begin(), section_order().end(), sec) == section_order().end())
      throw Error(ErrorKind::Schema, "unknown section '" + sec + "'");
  }
  for (const char* required : {"space", "geometry", "initial", "solve", "time", "output"})
    if (!s.raw.count(required)) throw Error(ErrorKind::Schema, std::string("missing block '") + required + "'");

  detail::Reader space(s.raw, "space");
  s.m = static_cast<int>(space.integer("m"));
  if (s.m < 1 || s.m > 8) space.fail("m", "must lie in [1, 8]");
  {
    auto rows = space.list("A", ';');
    if (static_cast<int>(rows.size()) != s.m) space.fail("A", "must have m rows separated by ';'");
    s.A_entries.resize(s.m, s.m);
    for (int r = 0; r < s.m; ++r) {
      std::stringstream ss(rows[r]);
      std::string item;
      int c = 0;
      while (std::getline(ss, item, ',')) {
        if (c >= s.m) space.fail("A", "has a row longer than m");
        try {
          s.A_entries(r, c++) = Expression(trim(item))(0.0);
        } catch (const Error& e) {
          space.fail("A", "has a malformed entry: " + e.message());
        }
      }
      if (c != s.m) space.fail("A", "has a row shorter than m");
    }
  }
  s.phi = space.real("phi", pi / 2);
  s.M = space.real("M", 2.0);
  if (!(s.phi >= 0.0 && s.phi < pi)) space.fail("phi", "must lie in [0, pi)");
  if (!(s.M > 0.0)) space.fail("M", "must be > 0");
  space.reject_unknown();

  detail::Reader geo(s.raw, "geometry");
  s.nu = geo.real("nu");
  s.L = geo.real("L", 2.0 * pi);
  s.nx = static_cast<int>(geo.integer("nx", 128));
  s.ny = static_cast<int>(geo.integer("ny", 33));
  s.alpha = geo.real("alpha", 0.5);
  s.h_min = geo.real("h_min", 1e-6 * s.nu);
  if (!(s.nu > 0.0)) geo.fail("nu", "must be > 0");
  if (!(s.L > 0.0)) geo.fail("L", "must be > 0");
  if (s.nx < 8 || (s.nx & (s.nx - 1)) != 0) geo.fail("nx", "must be a power of two >= 8");
  if (s.ny < 5 || s.ny > 257) geo.fail("ny", "must lie in [5, 257]");
  if (!(s.alpha > 0.0 && s.alpha < 1.0)) geo.fail("alpha", "must lie in (0, 1)");
  if (!(s.h_min > 0.0)) geo.fail("h_min", "must be > 0");
  geo.reject_unknown();

  detail::Reader init(s.raw, "initial");
  auto ax = fourier_axis(s.nx, s.L);
  s.g0.resize(s.nx, s.m);
  for (int c = 0; c < s.m; ++c) {
    const std::string key = detail::component_key(s.m, c);
    const std::string tkey = key + ".table";
    if (init.has(key) == init.has(tkey)) init.fail(key, "needs exactly one of an expression or a '.table'");
    if (init.has(key)) {
      s.g_source.push_back(init.text(key));
      try {
        Expression e(init.text(key));
        for (int i = 0; i < s.nx; ++i) s.g0(i, c) = e(ax->nodes()(i));
      } catch (const Error& err) {
        init.fail(key, err.message());
      }
    } else {
      s.g_source.push_back(init.text(tkey));
      auto vals = init.reals(tkey);
      if (static_cast<int>(vals.size()) != s.nx) init.fail(tkey, "must list nx values");
      for (int i = 0; i < s.nx; ++i) s.g0(i, c) = vals[i];
    }
  }
  if (!all_finite(s.g0)) init.fail(detail::component_key(s.m, 0), "evaluates to non-finite values");
  init.reject_unknown();

  detail::Reader solve(s.raw, "solve");
  s.mu_solve = solve.real("mu");
  s.tol = solve.real("tol", 1e-12);
  if (!(s.mu_solve >= 0.0)) solve.fail("mu", "must be >= 0");
  if (!(s.tol > 0.0 && s.tol < 1e-2)) solve.fail("tol", "must lie in (0, 1e-2)");
  double step_tol = solve.real("step_tol", 1e-10);
  if (!(step_tol > 0.0 && step_tol < 1e-2)) solve.fail("step_tol", "must lie in (0, 1e-2)");
  solve.reject_unknown();

  detail::Reader time(s.raw, "time");
  EvolutionConfig& cfg = s.time;
  cfg.dt = time.real("dt");
  cfg.t_end = time.real("t_end");
  std::string scheme = time.text("scheme", "semi_implicit_euler");
  if (scheme != "semi_implicit_euler") time.fail("scheme", "must be semi_implicit_euler");
  if (time.has("norm_cap")) cfg.breakdown_norm_cap = time.real("norm_cap");
  if (time.has("margin_floor")) cfg.boundary_margin_floor = time.real("margin_floor");
  cfg.ramp_rate = time.real("ramp_rate", 0.0);
  std::string jac = time.text("jacobian", "exact");
  if (jac == "exact") cfg.jacobian = Jacobian::Exact;
  else if (jac == "frozen") cfg.jacobian = Jacobian::Frozen;
  else time.fail("jacobian", "must be exact or frozen");
  time.reject_unknown();

  detail::Reader out(s.raw, "output");
  s.out_dir = out.text("dir");
  s.stride = static_cast<int>(out.integer("stride", 1));
  if (out.has("formats")) {
    s.formats = out.list("formats");
    for (const auto& f : s.formats)
      if (f != "csv" && f != "json") out.fail("formats", "may only list csv and json");
  }
  out.reject_unknown();

  cfg.mu_solve = s.mu_solve;
  cfg.output_stride = s.stride;
  cfg.alpha = s.alpha;
  cfg.solver = s.solver_options();
  cfg.step_gmres.tol = step_tol;
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Schema, e.message());
  }

  detail::Reader diag(s.raw, "diagnostics");
  if (diag.present()) {
    DiagnosticsConfig& d = s.diagnostics;
    if (diag.has("freeze_nodes")) {
      d.freeze_nodes.clear();
      for (double v : diag.reals("freeze_nodes")) {
        if (v != std::floor(v) || v < 0 || v >= s.nx) diag.fail("freeze_nodes", "must list node indices in [0, nx)");
        d.freeze_nodes.push_back(static_cast<int>(v));
      }
    }
    if (diag.has("deltas")) {
      d.deltas = diag.reals("deltas");
      for (double v : d.deltas)
        if (!(v > 0.0 && v <= 1.0)) diag.fail("deltas", "must lie in (0, 1]");
    }
    d.localization_t = diag.real("t", 1.0);
    if (!(d.localization_t >= 0.0 && d.localization_t <= 1.0)) diag.fail("t", "must lie in [0, 1]");
    d.direction = diag.text("direction", d.direction);
    try {
      Expression{d.direction};
    } catch (const Error& e) {
      diag.fail("direction", e.message());
    }
    if (diag.has("mus")) {
      d.coercivity_mus = diag.reals("mus");
      for (double v : d.coercivity_mus)
        if (!(v > 0.0)) diag.fail("mus", "must be > 0");
    }
    d.ensemble = static_cast<int>(diag.integer("ensemble", 4));
    if (d.ensemble < 1 || d.ensemble > 64) diag.fail("ensemble", "must lie in [1, 64]");
    long long seed = diag.integer("seed", 7);
    if (seed < 0) diag.fail("seed", "must be >= 0");
    d.seed = static_cast<std::uint64_t>(seed);
    diag.reject_unknown();
  }
  return s;
}

/**
 * Numerical validation: positivity of A on its sector, the ellipticity floor of
 * the transformed coefficients and membership of g0 in W1. The V_nu margin is
 * recorded but does not gate.
 */
inline ValidationReport validate_scenario(Scenario& s) {
  ValidationReport& v = s.validation;
  SectorialOperator A = [&] {
    try {
      return s.op();
    } catch (const Error& e) {
      throw Error(ErrorKind::Validation, "space: " + e.message());
    }
  }();
  v.sectorial = validate_sectorial(A);
  if (!v.sectorial.pass)
    throw Error(ErrorKind::Validation, "space: operator A is not positive on its sector (" + v.sectorial.message + ")");
  std::optional<InterfaceProfile> p;
  try {
    p.emplace(s.profile());
  } catch (const Error& e) {
    throw Error(ErrorKind::Validation, "initial: " + e.message());
  }
  v.ellipticity = ellipticity_floor(coefficients(*p, chebyshev_axis(s.ny)));
  if (!v.ellipticity.pass) {
    std::ostringstream os;
    os << "initial: ellipticity violated, least eigenvalue of [a_ij] minus alpha is " << v.ellipticity.margin
       << " at node " << v.ellipticity.worst_node;
    throw Error(ErrorKind::Validation, os.str());
  }
  try {
    v.admissibility = admissibility(*p, A, s.mu_solve, s.solver_options());
  } catch (const Error& e) {
    throw Error(ErrorKind::Validation, "initial: admissibility check failed: " + e.message());
  }
  if (!v.admissibility.in_W1) {
    std::ostringstream os;
    os << "initial: profile lies outside W1 (margin " << v.admissibility.margin << ")";
    throw Error(ErrorKind::Validation, os.str());
  }
  v.pass = true;
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string stem_of(const std::string& path) {
  std::size_t slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

/// Reads, parses and validates a scenario file.
inline Scenario load_scenario(const std::string& path) {
  Scenario s = parse_scenario(read_file(path), stem_of(path));
  validate_scenario(s);
  return s;
}

/// Writes the canonical form, which parses back to the same checksum.
inline std::string serialize(const Scenario& s) { return s.canonical(); }

}  // namespace stripflow

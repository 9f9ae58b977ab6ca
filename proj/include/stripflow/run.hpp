#pragma once
/**
 * @brief Run orchestration: executes one mode on a validated scenario, builds
 *        the manifest and writes the output directory atomically.
 */
#include "io.hpp"
#include "scenario.hpp"

#include <chrono>
#include <nlohmann/json.hpp>

#ifndef STRIPFLOW_VERSION
#define STRIPFLOW_VERSION "1.0.0"
#endif

namespace stripflow {

using Json = nlohmann::ordered_json;

enum class Mode { Evolve, DiagnoseFrozen, DiagnoseCoercivity, DiagnoseLocalization };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Evolve: return "evolve";
    case Mode::DiagnoseFrozen: return "diagnose-frozen";
    case Mode::DiagnoseCoercivity: return "diagnose-coercivity";
    case Mode::DiagnoseLocalization: return "diagnose-localization";
  }
  return "?";
}

inline Mode parse_mode(const std::string& s) {
  for (Mode m : {Mode::Evolve, Mode::DiagnoseFrozen, Mode::DiagnoseCoercivity, Mode::DiagnoseLocalization})
    if (s == to_string(m)) return m;
  throw Error(ErrorKind::Validation, "unknown mode '" + s + "'");
}

enum ExitCode : int { ExitCompleted = 0, ExitValidation = 2, ExitBreakdown = 3, ExitInternal = 4 };

struct RunOptions {
  Mode mode = Mode::Evolve;
  std::string out_dir;  // overrides output.dir when set
  bool deterministic = false;
  std::optional<std::uint64_t> seed;
  AtomicDirectory::Hook after_write;  // test hook, called after every staged file
};

struct RunOutcome {
  std::string status;
  int exit_code = ExitCompleted;
  Json manifest;
  std::filesystem::path directory;
  std::vector<std::string> files;
};

namespace detail {

/// Seeded smooth random trace: Fourier coefficients decaying like (1 + k^2)^-2 up to |k| <= nx/4.
inline CMat smooth_random(const FourierAxis& ax, int m, std::mt19937_64& rng, bool real_valued = true) {
  std::normal_distribution<double> nd;
  const int nx = ax.size();
  CMat hat = CMat::Zero(nx, m);
  for (int k = 0; k <= nx / 4; ++k) {
    double kw = k;
    double amp = 1.0 / std::pow(1.0 + kw * kw, 2.0);
    for (int c = 0; c < m; ++c) {
      Complex z = amp * Complex(nd(rng), nd(rng));
      if (k == 0) z = Complex(z.real(), 0.0);
      hat(k, c) = z;
      if (real_valued && k > 0 && k < nx / 2) hat(nx - k, c) = std::conj(z);
      if (k == nx / 2) hat(k, c) = Complex(z.real(), 0.0);
    }
  }
  CMat u = ax.inverse() * hat;
  if (real_valued) u = u.real().cast<Complex>();
  return u;
}

inline Json check(bool pass, double value) {
  Json j;
  j["pass"] = pass;
  j["value"] = value;
  return j;
}

inline Json validation_json(const ValidationReport& v) {
  Json j;
  j["sectorial"] = {{"pass", v.sectorial.pass}, {"worst_ratio", v.sectorial.worst_ratio},
                    {"min_real_eigenvalue", v.sectorial.min_real_eigenvalue}};
  j["ellipticity"] = {{"pass", v.ellipticity.pass}, {"margin", v.ellipticity.margin},
                      {"min_eigenvalue", v.ellipticity.min_eigenvalue}, {"min_alpha", v.ellipticity.min_alpha}};
  j["admissibility"] = {{"in_W1", v.admissibility.in_W1}, {"margin", v.admissibility.margin},
                        {"in_Vnu", v.admissibility.in_Vnu}, {"vnu_margin", v.admissibility.vnu_margin}};
  return j;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

struct ModeResult {
  std::string status = "Completed";
  int exit_code = ExitCompleted;
  Json checks = Json::object();
  std::vector<std::pair<std::string, std::string>> files;  // name, content
};

inline ModeResult run_evolve(const Scenario& s) {
  ModeResult r;
  SectorialOperator A = s.op();
  Trajectory tr = evolve(s.profile(), A, s.time);
  r.status = to_string(tr.status);
  switch (tr.status) {
    case RunStatus::Completed: r.exit_code = ExitCompleted; break;
    case RunStatus::NormBlowup:
    case RunStatus::BoundaryApproach: r.exit_code = ExitBreakdown; break;
    case RunStatus::SolverFailure: r.exit_code = ExitInternal; break;
  }
  bool increasing = true;
  for (std::size_t i = 1; i < tr.times.size(); ++i) increasing = increasing && tr.times[i] > tr.times[i - 1];
  int flags = 0;
  for (const auto& d : tr.diagnostics) flags += d.flag != Breakdown::Ok;
  r.checks["times_increasing"] = detail::check(increasing, static_cast<double>(tr.times.size()));
  r.checks["single_breakdown_flag"] = detail::check(flags <= 1, flags);
  const DtN last(tr.profiles.back(), A, s.mu_solve, s.solver_options());
  const Reconstruction rc = reconstruct(last);
  r.checks["kinetic_residual"] = detail::check(rc.relative < 1e-6, rc.relative);
  r.checks["reconstruction_inside"] = detail::check(rc.inside, rc.inside ? 1.0 : 0.0);
  Json summary;
  summary["samples"] = tr.times.size();
  summary["final_time"] = tr.times.back();
  summary["norm_cap"] = tr.norm_cap;
  summary["margin_floor"] = tr.margin_floor;
  summary["message"] = tr.message;
  summary["warnings"] = tr.warnings;
  r.checks["trajectory"] = summary;
  const bool csv = std::find(s.formats.begin(), s.formats.end(), "csv") != s.formats.end();
  if (csv) {
    r.files.emplace_back("trajectory.csv", trajectory_csv(tr));
    r.files.emplace_back("diagnostics.csv", diagnostics_csv(tr));
  }
  return r;
}

inline ModeResult run_frozen(const Scenario& s, std::uint64_t seed) {
  ModeResult r;
  SectorialOperator A = s.op();
  DtN d(s.profile(), A, s.mu_solve, s.solver_options());
  Json nodes = Json::array();
  bool all = true;
  for (int node : s.diagnostics.freeze_nodes) {
    FrozenOperatorSet fs = frozen_set(d, node);
    SectorReport sr = sector_report(fs, A, s.alpha, 12, seed);
    double sum_err = 0.0;
    for (int k = 0; k < s.nx; ++k)
      sum_err = std::max(sum_err, (fs.o0[k] - fs.o10[k] - fs.o20[k] - fs.o30[k]).cwiseAbs().maxCoeff());
    Json j;
    j["node"] = node;
    j["x0"] = fs.x0;
    Json parts = Json::array();
    for (const auto& p : sr.parts)
      parts.push_back({{"part", p.name}, {"min_re", p.min_re}, {"half_angle", p.half_angle}, {"pass", p.pass}});
    j["parts"] = parts;
    j["c1"] = sr.c1;
    j["c2"] = sr.c2;
    j["ratio"] = sr.ratio;
    j["resolvent_ok"] = sr.resolvent_ok;
    j["generates_analytic_semigroup"] = sr.generates_analytic_semigroup;
    j["sum_identity_error"] = sum_err;
    nodes.push_back(j);
    all = all && sr.generates_analytic_semigroup && sr.resolvent_ok && sum_err <= 1e-12;
  }
  r.checks["sector_report"] = detail::check(all, static_cast<double>(s.diagnostics.freeze_nodes.size()));
  Json out;
  out["mu"] = s.mu_solve;
  out["nodes"] = nodes;
  r.files.emplace_back("frozen.json", detail::dump(out));
  return r;
}

inline ModeResult run_coercivity(const Scenario& s, std::uint64_t seed) {
  ModeResult r;
  SectorialOperator A = s.op();
  InterfaceProfile p = s.profile();
  std::mt19937_64 rng(seed);
  auto y = chebyshev_axis(s.ny);
  std::vector<StripData> ens;
  std::vector<CMat> traces;
  for (int e = 0; e < s.diagnostics.ensemble; ++e) {
    StripData d{StripField(p.axis_ptr(), y, s.m), detail::smooth_random(p.axis(), s.m, rng),
                detail::smooth_random(p.axis(), s.m, rng)};
    CMat base = detail::smooth_random(p.axis(), s.m, rng);
    for (int c = 0; c < s.m; ++c)
      for (int j = 0; j < s.ny; ++j)
        for (int i = 0; i < s.nx; ++i) d.F(i, j, c) = base(i, c) * (1.0 + y->nodes()(j) * y->nodes()(j));
    ens.push_back(d);
    traces.push_back(d.psi0);
  }
  Json rows33 = Json::array();
  std::vector<double> per_mu;
  for (double mu : s.diagnostics.coercivity_mus) {
    CoercivityReport33 rep = coercivity_probe_33(p, A, mu, ens, s.alpha, s.solver_options());
    rows33.push_back({{"mu", mu}, {"max_ratio", rep.max_ratio}});
    per_mu.push_back(rep.max_ratio);
  }
  const double spread33 = *std::max_element(per_mu.begin(), per_mu.end()) / *std::min_element(per_mu.begin(), per_mu.end());
  // frozen coefficients at the first node on y = 0
  StripSolver sol(p, A, s.mu_solve, Boundary0::Dirichlet, s.solver_options());
  const auto& co = sol.coefficients_used();
  RVec a12(s.m), a22(s.m);
  for (int c = 0; c < s.m; ++c) {
    a12(c) = co.a12(0, c * s.ny).real();
    a22(c) = co.a22(0, c * s.ny).real();
  }
  FrozenCoefficients fc(a12, a22, A, s.mu_solve);
  CoercivityReport59 rep59 = coercivity_probe_59(fc, p.axis_ptr(), traces, s.diagnostics.coercivity_mus, s.alpha, s.ny);
  Json rows59 = Json::array();
  for (const auto& row : rep59.rows) rows59.push_back({{"mu", row.mu}, {"ratio", row.ratio}});
  r.checks["strip_mu_spread"] = detail::check(spread33 < 2.0, spread33);
  r.checks["halfplane_mu_spread"] = detail::check(rep59.mu_spread < 2.0, rep59.mu_spread);
  Json out;
  out["strip"] = {{"rows", rows33}, {"mu_spread", spread33}};
  out["halfplane"] = {{"rows", rows59}, {"mu_spread", rep59.mu_spread}};
  r.files.emplace_back("coercivity.json", detail::dump(out));
  return r;
}

inline ModeResult run_localization(const Scenario& s) {
  ModeResult r;
  SectorialOperator A = s.op();
  InterfaceProfile p = s.profile();
  DtN d(p, A, s.mu_solve, s.solver_options());
  Expression dir(s.diagnostics.direction);
  CMat psi(s.nx, s.m);
  for (int i = 0; i < s.nx; ++i)
    for (int c = 0; c < s.m; ++c) psi(i, c) = dir(p.axis().nodes()(i));
  Json rows = Json::array();
  std::vector<double> rel;
  for (double delta : s.diagnostics.deltas) {
    LocalizationReport lr = localization_residual(d, A, delta, psi, s.diagnostics.localization_t, s.alpha);
    rows.push_back({{"delta", delta},
                    {"patches", lr.centers.size()},
                    {"max_residual", lr.max_residual},
                    {"max_relative", lr.max_relative}});
    rel.push_back(lr.max_relative);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < rel.size(); ++i) decreasing = decreasing && rel[i] < rel[i - 1];
  r.checks["localization_decreasing"] = detail::check(decreasing, rel.empty() ? 0.0 : rel.back());
  Json out;
  out["t"] = s.diagnostics.localization_t;
  out["direction"] = s.diagnostics.direction;
  out["rows"] = rows;
  r.files.emplace_back("localization.json", detail::dump(out));
  return r;
}

/**
 * Runs a validated scenario. Numerical failures inside the mode are recorded
 * in the manifest; the directory is written in all of those cases.
 */
inline RunOutcome run(const Scenario& s, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = opt.seed ? *opt.seed : s.diagnostics.seed;
  ModeResult mr;
  std::string error;
  try {
    switch (opt.mode) {
      case Mode::Evolve: mr = run_evolve(s); break;
      case Mode::DiagnoseFrozen: mr = run_frozen(s, seed); break;
      case Mode::DiagnoseCoercivity: mr = run_coercivity(s, seed); break;
      case Mode::DiagnoseLocalization: mr = run_localization(s); break;
    }
  } catch (const Error& e) {
    mr = ModeResult{};
    const bool validation = e.kind() == ErrorKind::Validation || e.kind() == ErrorKind::Ellipticity ||
                            e.kind() == ErrorKind::Degenerate;
    mr.status = validation ? "ValidationFailure" : "SolverFailure";
    mr.exit_code = validation ? ExitValidation : ExitInternal;
    error = e.what();
  }
  RunOutcome out;
  out.status = mr.status;
  out.exit_code = mr.exit_code;
  Json& j = out.manifest;
  j["scenario"] = s.name;
  j["scenario_checksum"] = s.checksum();
  j["artifact_version"] = STRIPFLOW_VERSION;
  j["mode"] = to_string(opt.mode);
  j["grid"] = {{"nx", s.nx}, {"ny", s.ny}, {"m", s.m}, {"L", s.L}, {"nu", s.nu}};
  j["seed"] = seed;
  j["deterministic"] = opt.deterministic;
  j["validation"] = detail::validation_json(s.validation);
  j["checks"] = mr.checks;
  j["status"] = mr.status;
  j["exit_code"] = mr.exit_code;
  if (!error.empty()) j["error"] = error;
  std::vector<std::string> names;
  for (const auto& f : mr.files) names.push_back(f.first);
  names.push_back("manifest.json");
  j["files"] = names;
  if (!opt.deterministic)
    j["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out.directory = opt.out_dir.empty() ? std::filesystem::path(s.out_dir) : std::filesystem::path(opt.out_dir);
  AtomicDirectory dir(out.directory, opt.after_write);
  for (const auto& [name, content] : mr.files) dir.write(name, content);
  dir.write("manifest.json", detail::dump(j));
  dir.commit();
  out.files = names;
  return out;
}

}  // namespace stripflow

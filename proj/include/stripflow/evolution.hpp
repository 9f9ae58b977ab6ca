#pragma once
/**
 * @brief Linearly-implicit time stepping of dg/dt + O(g) = 0 in the trace
 *        space, breakdown detection and reconstruction of the physical pair.
 */
#include "dtn.hpp"

#include <optional>
#include <sstream>

namespace stripflow {

enum class Scheme { SemiImplicitEuler };

/// Which linearization enters the implicit solve.
enum class Jacobian { Exact, Frozen };

struct EvolutionConfig {
  double dt = 0.05;
  double t_end = 1.0;
  Scheme scheme = Scheme::SemiImplicitEuler;
  double mu_solve = 1.0;
  std::optional<double> breakdown_norm_cap;     // default 1e3 |g0|_{h^{2,alpha}} + 1
  std::optional<double> boundary_margin_floor;  // default 1e-3 of the initial W1 margin
  int output_stride = 1;
  double alpha = 0.5;
  Jacobian jacobian = Jacobian::Exact;
  /// Linear forcing r g added to the right-hand side; drives amplitude ramps.
  double ramp_rate = 0.0;
  StripSolverOptions solver;
  GmresOptions step_gmres{1e-10, 40, 200};

  void validate() const {
    if (!(dt > 0.0)) throw Error(ErrorKind::Validation, "time.dt must be > 0");
    if (!(t_end > 0.0)) throw Error(ErrorKind::Validation, "time.t_end must be > 0");
    if (!(dt < t_end)) throw Error(ErrorKind::Validation, "time.dt must be smaller than time.t_end");
    if (!(mu_solve >= 0.0)) throw Error(ErrorKind::Validation, "solve.mu must be >= 0");
    if (breakdown_norm_cap && !(*breakdown_norm_cap > 0.0))
      throw Error(ErrorKind::Validation, "time.norm_cap must be > 0");
    if (boundary_margin_floor && !(*boundary_margin_floor > 0.0))
      throw Error(ErrorKind::Validation, "time.margin_floor must be > 0");
    if (output_stride < 1) throw Error(ErrorKind::Validation, "output.stride must be a positive integer");
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::Validation, "geometry.alpha must lie in (0, 1)");
    if (!(ramp_rate >= 0.0)) throw Error(ErrorKind::Validation, "time.ramp_rate must be >= 0");
  }
};

enum class RunStatus { Completed, NormBlowup, BoundaryApproach, SolverFailure };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "Completed";
    case RunStatus::NormBlowup: return "NormBlowup";
    case RunStatus::BoundaryApproach: return "BoundaryApproach";
    case RunStatus::SolverFailure: return "SolverFailure";
  }
  return "?";
}

enum class Breakdown { Ok, NormBlowup, BoundaryApproach };

inline const char* to_string(Breakdown b) {
  switch (b) {
    case Breakdown::Ok: return "OK";
    case Breakdown::NormBlowup: return "NormBlowup";
    case Breakdown::BoundaryApproach: return "BoundaryApproach";
  }
  return "?";
}

struct StepDiagnostics {
  int step = 0;
  double t = 0.0;
  double h2alpha_norm = 0.0;
  double w1_margin = 0.0;
  double solve_residual = 0.0;  // strip solve for v = K(g) g
  double step_residual = 0.0;   // implicit trace-space solve
  int step_iterations = 0;
  Breakdown flag = Breakdown::Ok;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<InterfaceProfile> profiles;
  std::vector<StepDiagnostics> diagnostics;
  RunStatus status = RunStatus::Completed;
  std::string message;
  double norm_cap = 0.0, margin_floor = 0.0;
  std::vector<std::string> warnings;
};

/// Norms the breakdown test looks at, for the current profile.
struct BreakdownNorms {
  double h2alpha = 0.0;
  double w1_margin = 0.0;
};

/// Breakdown alternative on the discrete trajectory. Norm growth is tested first, so at most
/// one flag is ever raised.
inline Breakdown detect_breakdown(const EvolutionConfig& cfg, const BreakdownNorms& n) {
  if (!cfg.breakdown_norm_cap || !cfg.boundary_margin_floor)
    throw Error(ErrorKind::Domain, "breakdown thresholds are not resolved");
  if (!std::isfinite(n.h2alpha) || n.h2alpha > *cfg.breakdown_norm_cap) return Breakdown::NormBlowup;
  if (!std::isfinite(n.w1_margin) || n.w1_margin < *cfg.boundary_margin_floor) return Breakdown::BoundaryApproach;
  return Breakdown::Ok;
}

struct StepResult {
  InterfaceProfile next;
  double residual = 0.0;
  int iterations = 0;
};

namespace detail {

inline bool real_setting(const InterfaceProfile& p, const SectorialOperator& A) {
  return p.g().imag().cwiseAbs().maxCoeff() == 0.0 && A.matrix().imag().cwiseAbs().maxCoeff() == 0.0;
}

inline CVec flat_vec(const CMat& m) { return Eigen::Map<const CVec>(m.data(), m.size()); }

inline CMat unflat(const CVec& v, int rows, int cols) { return Eigen::Map<const CMat>(v.data(), rows, cols); }

}  // namespace detail

/**
 * One linearly-implicit Euler step from the context d = DtN(g_n):
 * (I + dt (dO(g_n) - r)) delta = -dt (O(g_n) - r g_n), g_{n+1} = g_n + delta.
 * The trace-space system is solved by GMRES preconditioned with the frozen
 * symbol at the first node.
 */
inline StepResult step(const DtN& d, double dt, const EvolutionConfig& cfg = {}) {
  const InterfaceProfile& p = d.profile();
  const SectorialOperator& A = d.solver().op();
  const int nx = p.nx(), m = p.dim();
  const double r = cfg.ramp_rate;
  const CMat rhs = -dt * (d.value() - r * p.g());
  const FrozenOperatorSet fs = frozen_set(d, 0);
  std::vector<Eigen::PartialPivLU<CMat>> blocks;
  blocks.reserve(nx);
  for (int k = 0; k < nx; ++k)
    blocks.emplace_back(CMat::Identity(m, m) + dt * (fs.o0[k] - r * CMat::Identity(m, m)));
  const auto& ax = p.axis();
  LinearMap M = [&](const CVec& v) {
    CMat hat = ax.forward() * detail::unflat(v, nx, m);
    for (int k = 0; k < nx; ++k) hat.row(k) = blocks[k].solve(CVec(hat.row(k).transpose())).transpose();
    return detail::flat_vec(ax.inverse() * hat);
  };
  LinearMap Aop;
  if (cfg.jacobian == Jacobian::Exact) {
    Aop = [&](const CVec& v) {
      CMat psi = detail::unflat(v, nx, m);
      return detail::flat_vec(psi + dt * (d.derivative(psi) - r * psi));
    };
  } else {
    Aop = [&](const CVec& v) {
      CMat psi = detail::unflat(v, nx, m);
      return detail::flat_vec(psi + dt * (fs.apply(FrozenPart::O0, psi) - r * psi));
    };
  }
  GmresResult gr = gmres(Aop, M, detail::flat_vec(rhs), CVec(), cfg.step_gmres);
  if (!gr.converged || !all_finite(gr.x))
    throw SolverError("implicit step did not converge (relative residual " + std::to_string(gr.residual) + ")",
                      d.solver().mu());
  CMat delta = detail::unflat(gr.x, nx, m);
  CMat next = p.g() + delta;
  if (detail::real_setting(p, A)) next = next.real().cast<Complex>();
  return {p.with_g(std::move(next)), gr.residual, gr.iterations};
}

inline StepResult step(const InterfaceProfile& p, const SectorialOperator& A, double dt, double mu_solve,
                       const EvolutionConfig& cfg = {}) {
  return step(DtN(p, A, mu_solve, cfg.solver), dt, cfg);
}

/// Resolves the default breakdown thresholds from the initial state.
inline EvolutionConfig resolve_thresholds(EvolutionConfig cfg, double h2alpha0, double margin0) {
  if (!cfg.breakdown_norm_cap) cfg.breakdown_norm_cap = 1e3 * h2alpha0 + 1.0;
  if (!cfg.boundary_margin_floor) cfg.boundary_margin_floor = 1e-3 * margin0;
  return cfg;
}

inline double profile_h2alpha(const InterfaceProfile& p, const SectorialOperator& A, double alpha) {
  return TraceNorms(p.axis_ptr(), A, alpha).h2(p.g());
}

/**
 * Iterates step() to t_end. Every step is checked by detect_breakdown; the run
 * stops at the first flag or solver failure. Samples and diagnostic rows are
 * kept every output_stride steps and always at the final state.
 */
inline Trajectory evolve(const InterfaceProfile& p0, const SectorialOperator& A, EvolutionConfig cfg) {
  cfg.validate();
  auto ctx = std::make_unique<DtN>(p0, A, cfg.mu_solve, cfg.solver);
  AdmissibilityReport adm = admissibility(*ctx);
  if (!adm.in_W1) {
    std::ostringstream os;
    os << "initial profile is not admissible: W1 margin " << adm.margin << ", V_nu margin " << adm.vnu_margin;
    throw Error(ErrorKind::Validation, os.str());
  }
  const TraceNorms tn(p0.axis_ptr(), A, cfg.alpha);
  const double n0 = tn.h2(p0.g());
  cfg = resolve_thresholds(cfg, n0, adm.margin);

  Trajectory tr;
  tr.norm_cap = *cfg.breakdown_norm_cap;
  tr.margin_floor = *cfg.boundary_margin_floor;
  if (cfg.jacobian == Jacobian::Frozen)
    tr.warnings.push_back("frozen Jacobian: the implicit solve uses the frozen operator at the first node");
  auto record = [&](double t, const InterfaceProfile& p, const StepDiagnostics& row) {
    tr.times.push_back(t);
    tr.profiles.push_back(p);
    tr.diagnostics.push_back(row);
  };

  StepDiagnostics row;
  row.t = 0.0;
  row.h2alpha_norm = n0;
  row.w1_margin = adm.margin;
  row.solve_residual = ctx->solve_residual();
  row.flag = detect_breakdown(cfg, {n0, adm.margin});
  record(0.0, p0, row);
  if (row.flag != Breakdown::Ok) {
    tr.status = row.flag == Breakdown::NormBlowup ? RunStatus::NormBlowup : RunStatus::BoundaryApproach;
    tr.message = "initial state already meets the breakdown threshold";
    return tr;
  }

  const int steps = static_cast<int>(std::ceil(cfg.t_end / cfg.dt - 1e-9));
  for (int n = 1; n <= steps; ++n) {
    const double t = std::min(cfg.t_end, n * cfg.dt);
    const double dt_n = t - std::min(cfg.t_end, (n - 1) * cfg.dt);
    StepDiagnostics cur;
    cur.step = n;
    cur.t = t;
    std::optional<InterfaceProfile> next;
    try {
      StepResult sr = step(*ctx, dt_n, cfg);
      cur.step_residual = sr.residual;
      cur.step_iterations = sr.iterations;
      next = std::move(sr.next);
      ctx = std::make_unique<DtN>(*next, A, cfg.mu_solve, cfg.solver);
    } catch (const Error& e) {
      tr.status = RunStatus::SolverFailure;
      tr.message = "step " + std::to_string(n) + " at t = " + std::to_string(t) + ": " + e.what();
      if (next) record(t, *next, cur);
      return tr;
    }
    cur.solve_residual = ctx->solve_residual();
    cur.h2alpha_norm = tn.h2(next->g());
    cur.w1_margin = admissibility(*ctx).margin;
    cur.flag = detect_breakdown(cfg, {cur.h2alpha_norm, cur.w1_margin});
    const bool last = n == steps || cur.flag != Breakdown::Ok;
    if (n % cfg.output_stride == 0 || last) record(t, *next, cur);
    if (cur.flag != Breakdown::Ok) {
      tr.status = cur.flag == Breakdown::NormBlowup ? RunStatus::NormBlowup : RunStatus::BoundaryApproach;
      tr.message = std::string(to_string(cur.flag)) + " at step " + std::to_string(n);
      return tr;
    }
  }
  tr.status = RunStatus::Completed;
  return tr;
}

/**
 * The physical pair on the moving domain: u sampled at x nodes and heights
 * y' = (1 - y_j) f_c(x_i) of component c, the interface datum f = nu + g, and
 * the kinetic residual f_t + sqrt(1 + f_x^2) du/dn with f_t = -O(g). The
 * physical derivatives go through a finite-difference Jacobian of the map
 * built from the trigonometric interpolant of f, independently of the
 * transformed boundary coefficients.
 */
struct Reconstruction {
  CMat f;                 // nx x m
  Eigen::MatrixXd ys;     // nx x (ny m) physical heights of the samples
  CMat u;                 // nx x (ny m) values of u at the samples
  CMat kinetic;           // nx x m kinetic residual
  double kinetic_max = 0.0;
  double relative = 0.0;  // kinetic_max / |O(g)|_inf (0 when O(g) = 0)
  bool inside = true;     // every sample lies in the closed physical domain
};

inline Reconstruction reconstruct(const DtN& d) {
  const InterfaceProfile& p = d.profile();
  const auto& ax = p.axis();
  const StripField& v = d.upsilon();
  const int nx = p.nx(), ny = v.ny(), m = p.dim();
  const RVec& yn = v.y_axis().nodes();
  Reconstruction r;
  r.f = p.f();
  r.ys.resize(nx, ny * m);
  r.u = v.data();
  r.kinetic.resize(nx, m);
  const CMat vx = v.dx().trace0(), vy = v.dy().trace0();
  const double e = 1e-5;
  for (int c = 0; c < m; ++c) {
    const CMat fc = r.f.col(c);
    auto F = [&](double x) { return ax.interpolate(fc, x)(0); };
    for (int i = 0; i < nx; ++i) {
      const double x = ax.nodes()(i);
      const Complex f0 = r.f(i, c);
      for (int j = 0; j < ny; ++j) {
        double yp = ((1.0 - yn(j)) * f0).real();
        r.ys(i, c * ny + j) = yp;
        if (yp < -1e-12 || yp > f0.real() + 1e-12) r.inside = false;
      }
      // strip coordinate y(x, y') = 1 - y'/F(x) at the interface y' = F(x)
      const Complex fp = F(x + e), fm = F(x - e);
      const Complex fxp = (fp - fm) / (2.0 * e);
      const Complex dydx = fxp / f0;  // d/dx (1 - y'/F) = y' F_x / F^2 at y' = F
      const Complex dydyp = -1.0 / f0;
      const Complex ux = vx(i, c) + vy(i, c) * dydx;
      const Complex uy = vy(i, c) * dydyp;
      const Complex flux = -fxp * ux + uy;  // sqrt(1 + f_x^2) du/dn, outer normal
      r.kinetic(i, c) = -d.value()(i, c) + flux;
    }
  }
  r.kinetic_max = r.kinetic.cwiseAbs().maxCoeff();
  const double on = d.value().cwiseAbs().maxCoeff();
  r.relative = on > 0.0 ? r.kinetic_max / on : 0.0;
  return r;
}

inline Reconstruction reconstruct(const InterfaceProfile& p, const SectorialOperator& A, double mu_solve,
                                  StripSolverOptions opt = {}) {
  return reconstruct(DtN(p, A, mu_solve, opt));
}

}  // namespace stripflow

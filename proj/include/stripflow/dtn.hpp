#pragma once
/**
 * @brief The interface operator O(g) = B0(g) K(g) g, its Frechet derivative,
 *        frozen-coefficient operators with their sector diagnostics, the
 *        admissible-set margins and the localization residual.
 */
#include "model_solver.hpp"

#include <random>

namespace stripflow {

/// Gateaux derivative of the operator family A(g); zero for a constant A.
using OperatorDerivativeHook = std::function<StripField(const CMat& psi, const StripField& v)>;

struct DerivativeParts {
  CMat kpsi;     // B0 K psi
  CMat db0;      // dB0[psi, K g]
  CMat correct;  // -B0 S dB[psi, K g]
  CMat total() const { return kpsi + db0 + correct; }
};

/**
 * Evaluation context for one profile: a single assembled strip operator and
 * the solution v = K(g) g, reused by the value, the derivative and the
 * frozen-operator constructions.
 */
class DtN {
 public:
  DtN(const InterfaceProfile& p, const SectorialOperator& A, double mu, StripSolverOptions opt = {})
      : solver_(std::make_shared<StripSolver>(p, A, mu, Boundary0::Dirichlet, opt)) {
    upsilon_ = solver_->solve_K(p.g());
    value_ = solver_->b0(upsilon_);
    residual_ = solver_->last_residual();
  }

  const InterfaceProfile& profile() const { return solver_->profile(); }
  const StripSolver& solver() const { return *solver_; }
  const StripField& upsilon() const { return upsilon_; }
  const CMat& value() const { return value_; }
  double solve_residual() const { return residual_; }

  void set_operator_derivative(OperatorDerivativeHook h) { dA_ = std::move(h); }

  /// dB(g)[psi, v]: the derivative of the interior operator in direction psi.
  StripField dB(const CMat& psi, const StripField& v) const {
    const InterfaceProfile& p = profile();
    const auto& ax = p.axis();
    const CMat psx = ax.d1() * psi, psxx = ax.d2() * psi;
    const StripField vy = v.dy(), vyy = v.dyy(), vxy = v.dx().dy();
    const RVec& beta = solver_->coefficients_used().beta;
    StripField out = v.zeros_like();
    const int nx = p.nx(), ny = v.ny();
    for (int c = 0; c < p.dim(); ++c)
      for (int j = 0; j < ny; ++j) {
        const double b = beta(j);
        for (int i = 0; i < nx; ++i) {
          const Complex f = p.f()(i, c), gx = p.gx()(i, c), gxx = p.gxx()(i, c);
          const Complex s = psi(i, c), sx = psx(i, c), sxx = psxx(i, c);
          Complex g1 = (2.0 * b / f) * (gx * s / f - sx) * vxy(i, j, c);
          Complex g2 = (2.0 / (f * f)) * ((1.0 + b * b * gx * gx) * s / f - b * b * gx * sx) * vyy(i, j, c);
          Complex g4 = b * (4.0 * gx * sx / (f * f) - 4.0 * gx * gx * s / (f * f * f) - sxx / f + gxx * s / (f * f)) *
                       vy(i, j, c);
          out(i, j, c) = g1 + g2 + g4;
        }
      }
    if (dA_) out += dA_(psi, v);
    return out;
  }

  /// dB0(g)[psi, v] on y = 0.
  CMat dB0(const CMat& psi, const StripField& v) const {
    const InterfaceProfile& p = profile();
    const CMat psx = p.axis().d1() * psi;
    const CMat vx = v.dx().trace0(), vy = v.dy().trace0();
    CMat out(p.nx(), p.dim());
    for (int c = 0; c < p.dim(); ++c)
      for (int i = 0; i < p.nx(); ++i) {
        const Complex f = p.f()(i, c), gx = p.gx()(i, c);
        out(i, c) = -psx(i, c) * vx(i, c) + ((1.0 + gx * gx) * psi(i, c) / f - 2.0 * gx * psx(i, c)) / f * vy(i, c);
      }
    return out;
  }

  DerivativeParts derivative_parts(const CMat& psi) const {
    DerivativeParts d;
    d.kpsi = solver_->b0(solver_->solve_K(psi));
    d.db0 = dB0(psi, upsilon_);
    StripField w = solver_->solve_S(dB(psi, upsilon_));
    d.correct = -solver_->b0(w);
    return d;
  }

  CMat derivative(const CMat& psi) const { return derivative_parts(psi).total(); }

 private:
  std::shared_ptr<StripSolver> solver_;
  StripField upsilon_;
  CMat value_;
  double residual_ = 0.0;
  OperatorDerivativeHook dA_;
};

struct DtNApplication {
  SampledFunction value;
  StripField upsilon;
  TransformedCoefficients coefficients;
  double residual = 0.0;
};

inline DtNApplication dtn_apply(const InterfaceProfile& p, const SectorialOperator& A, double mu_solve,
                                StripSolverOptions opt = {}) {
  DtN d(p, A, mu_solve, opt);
  return {SampledFunction::on_torus(p.axis(), d.value()), d.upsilon(), d.solver().coefficients_used(),
          d.solve_residual()};
}

inline CMat dtn_derivative(const InterfaceProfile& p, const SectorialOperator& A, double mu_solve, const CMat& psi,
                           StripSolverOptions opt = {}) {
  return DtN(p, A, mu_solve, opt).derivative(psi);
}

enum class FrozenPart { O10, O20, O30, O0 };

inline const char* to_string(FrozenPart p) {
  switch (p) {
    case FrozenPart::O10: return "O10";
    case FrozenPart::O20: return "O20";
    case FrozenPart::O30: return "O30";
    case FrozenPart::O0: return "O0";
  }
  return "?";
}

/**
 * Constant-coefficient operators frozen at (x0, 0), stored as one m-by-m symbol
 * per discrete Fourier mode. O10 is the strip Dirichlet-to-derivative map of
 * the frozen principal part, O20 the frozen dB0 term and O30 the frozen
 * -B0 S dB term (source parts G1, G2, G4; the A-derivative part is zero).
 */
struct FrozenOperatorSet {
  std::shared_ptr<const FourierAxis> axis;
  int node = 0;
  double x0 = 0.0;
  double mu = 0.0;
  int m = 1;
  CVec w0;  // w_g(x0, 0) per component
  std::vector<CMat> o10, o20, o30, o0;
  std::array<std::vector<CMat>, 3> o30_parts;  // G1, G2, G4

  const std::vector<CMat>& symbols(FrozenPart p) const {
    switch (p) {
      case FrozenPart::O10: return o10;
      case FrozenPart::O20: return o20;
      case FrozenPart::O30: return o30;
      case FrozenPart::O0: return o0;
    }
    return o0;
  }

  /// Applies a part to nodal values (nx x m) through the discrete transform.
  CMat apply(FrozenPart p, const CMat& u, double shift = 0.0) const {
    const auto& sym = symbols(p);
    CMat hat = axis->forward() * u;
    for (int k = 0; k < axis->size(); ++k) {
      CVec v = hat.row(k).transpose();
      hat.row(k) = (sym[k] * v + shift * v).transpose();
    }
    return axis->inverse() * hat;
  }
};

namespace detail {

/// Dirichlet-to-derivative map v -> v_y(0) of the frozen mode problem on [0, 1]
/// with v_y(1) = 0.
inline CMat strip_dtd(const CMat& D12, const CMat& D22, const CMat& Ak, double k1) {
  const int m = static_cast<int>(Ak.rows());
  CMat inv22 = D22.inverse();
  CMat C = CMat::Zero(2 * m, 2 * m);
  C.topRightCorner(m, m) = CMat::Identity(m, m);
  C.bottomLeftCorner(m, m) = inv22 * Ak;
  C.bottomRightCorner(m, m) = -2.0 * I_unit * k1 * inv22 * D12;
  Eigen::ComplexEigenSolver<CMat> es(C);
  double growth = es.eigenvalues().real().cwiseAbs().maxCoeff();
  if (growth < 300.0) {
    CMat E = C.exp();
    return -E.bottomRightCorner(m, m).partialPivLu().solve(E.bottomLeftCorner(m, m));
  }
  // deep modes: the reflected growing part is below roundoff, keep the decaying subspace
  CMat V1(m, m), V2(m, m);
  int col = 0;
  for (int i = 0; i < 2 * m && col < m; ++i)
    if (es.eigenvalues()(i).real() < 0.0) {
      V1.col(col) = es.eigenvectors().col(i).head(m);
      V2.col(col) = es.eigenvectors().col(i).tail(m);
      ++col;
    }
  return V2 * V1.partialPivLu().inverse();
}

}  // namespace detail

inline FrozenOperatorSet frozen_set(const DtN& dtn, int node) {
  const InterfaceProfile& p = dtn.profile();
  if (node < 0 || node >= p.nx()) throw Error(ErrorKind::Domain, "freeze point must be a grid node");
  const auto& co = dtn.solver().coefficients_used();
  const auto& ax = p.axis();
  const int m = p.dim(), ny = dtn.solver().ny();
  const double mu = dtn.solver().mu();
  FrozenOperatorSet s;
  s.axis = p.axis_ptr();
  s.node = node;
  s.x0 = ax.nodes()(node);
  s.mu = mu;
  s.m = m;
  const StripField& v = dtn.upsilon();
  const CMat vx = v.dx().trace0(), vy = v.dy().trace0(), vyy = v.dyy().trace0(), vxy = v.dx().dy().trace0();
  CVec f(m), gx(m), gxx(m), b1(m), b2(m), a12(m), a22(m), ux(m), uy(m), uyy(m), uxy(m);
  for (int c = 0; c < m; ++c) {
    f(c) = p.f()(node, c);
    gx(c) = p.gx()(node, c);
    gxx(c) = p.gxx()(node, c);
    b1(c) = co.b10(node, c);
    b2(c) = co.b20(node, c);
    a12(c) = co.a12(node, c * ny);
    a22(c) = co.a22(node, c * ny);
    ux(c) = vx(node, c);
    uy(c) = vy(node, c);
    uyy(c) = vyy(node, c);
    uxy(c) = vxy(node, c);
  }
  s.w0 = uy.cwiseQuotient(f);
  const CMat B1 = b1.asDiagonal(), B2 = b2.asDiagonal(), D12 = a12.asDiagonal(), D22 = a22.asDiagonal();
  const int nx = ax.size();
  s.o10.resize(nx);
  s.o20.resize(nx);
  s.o30.resize(nx);
  s.o0.resize(nx);
  for (auto& v3 : s.o30_parts) v3.resize(nx);
  for (int k = 0; k < nx; ++k) {
    const double kk = ax.wavenumber(k), k1 = ax.first_derivative_wavenumber(k);
    const Complex ik = I_unit * k1;
    const CMat Ak = dtn.solver().op().matrix() + (kk * kk + mu * mu) * CMat::Identity(m, m);
    const CMat Dk = detail::strip_dtd(D12, D22, Ak, k1);
    s.o10[k] = ik * B1 + B2 * Dk;
    CVec d20(m), g1(m), g2(m), g4(m);
    for (int c = 0; c < m; ++c) {
      const Complex fc = f(c), gc = gx(c);
      d20(c) = -ux(c) * ik + (uy(c) / fc) * ((1.0 + gc * gc) / fc - 2.0 * gc * ik);
      g1(c) = (2.0 / fc) * (gc / fc - ik) * uxy(c);
      g2(c) = (2.0 / (fc * fc)) * ((1.0 + gc * gc) / fc - gc * ik) * uyy(c);
      g4(c) = (4.0 * gc * ik / (fc * fc) - 4.0 * gc * gc / (fc * fc * fc) + kk * kk / fc + gxx(c) / (fc * fc)) * uy(c);
    }
    s.o20[k] = d20.asDiagonal();
    const CMat base = B2 * Dk * Ak.inverse();
    s.o30_parts[0][k] = base * g1.asDiagonal();
    s.o30_parts[1][k] = base * g2.asDiagonal();
    s.o30_parts[2][k] = base * g4.asDiagonal();
    s.o30[k] = s.o30_parts[0][k] + s.o30_parts[1][k] + s.o30_parts[2][k];
    s.o0[k] = s.o10[k] + s.o20[k] + s.o30[k];
  }
  return s;
}

inline FrozenOperatorSet frozen_set(const InterfaceProfile& p, const SectorialOperator& A, int node, double mu,
                                    StripSolverOptions opt = {}) {
  return frozen_set(DtN(p, A, mu, opt), node);
}

struct PartSectorReport {
  std::string name;
  double min_re = 0.0;
  double half_angle = 0.0;
  bool pass = false;
};

struct SectorReport {
  std::vector<PartSectorReport> parts;
  std::vector<Complex> eigenvalues;  // of O0 + mu0^2
  double c1 = 0.0, c2 = 0.0;         // two-sided bound over random u
  double ratio = 0.0;                // c2 / c1
  bool resolvent_ok = false;
  bool generates_analytic_semigroup = false;
};

namespace detail {

/// max |arg z| over eigenvalues and sampled numerical-range boundary points.
inline void sector_of(const CMat& B, double& min_re, double& angle, std::vector<Complex>* eig) {
  Eigen::ComplexEigenSolver<CMat> es(B, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    Complex z = es.eigenvalues()(i);
    min_re = std::min(min_re, z.real());
    angle = std::max(angle, std::abs(std::arg(z)));
    if (eig) eig->push_back(z);
  }
  if (B.rows() == 1) return;
  for (int t = 0; t < 64; ++t) {
    Complex rot = std::polar(1.0, -2.0 * pi * t / 64.0);
    CMat H = 0.5 * (rot * B + std::conj(rot) * B.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> hs(H);
    CVec x = hs.eigenvectors().col(B.rows() - 1);
    Complex z = x.dot(B * x);
    angle = std::max(angle, std::abs(std::arg(z)));
  }
}

}  // namespace detail

/**
 * Spectral and numerical-range check of each frozen part shifted by mu0^2, and
 * the two-sided ratio |(O0 + mu0^2) u|_{h^{1,alpha}} / |u|_{h^{2,alpha}} over
 * seeded random smooth u.
 */
inline SectorReport sector_report(const FrozenOperatorSet& s, const SectorialOperator& A, double alpha = 0.5,
                                  int samples = 12, std::uint64_t seed = 7) {
  SectorReport r;
  const double shift = s.mu * s.mu;
  bool all = true;
  for (FrozenPart part : {FrozenPart::O10, FrozenPart::O20, FrozenPart::O30, FrozenPart::O0}) {
    PartSectorReport pr{to_string(part), std::numeric_limits<double>::infinity(), 0.0, false};
    for (const CMat& sym : s.symbols(part)) {
      CMat B = sym + shift * CMat::Identity(s.m, s.m);
      detail::sector_of(B, pr.min_re, pr.half_angle, part == FrozenPart::O0 ? &r.eigenvalues : nullptr);
    }
    pr.pass = pr.min_re > 0.0 && pr.half_angle < pi / 2 + 0.1;
    all = all && pr.pass;
    r.parts.push_back(pr);
  }
  TraceNorms tn(s.axis, A, alpha);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const int nx = s.axis->size();
  r.c1 = std::numeric_limits<double>::infinity();
  for (int t = 0; t < samples; ++t) {
    CMat hat = CMat::Zero(nx, s.m);
    for (int k = 0; k < nx; ++k) {
      double kw = s.axis->wavenumber(k) * s.axis->length() / (2.0 * pi);
      if (std::abs(kw) > nx / 4) continue;
      double amp = 1.0 / std::pow(1.0 + kw * kw, 2.0);
      for (int c = 0; c < s.m; ++c) hat(k, c) = amp * Complex(nd(rng), nd(rng));
    }
    CMat u = s.axis->inverse() * hat;
    double q = tn.h1(s.apply(FrozenPart::O0, u, shift)) / tn.h2(u);
    r.c1 = std::min(r.c1, q);
    r.c2 = std::max(r.c2, q);
  }
  r.ratio = r.c2 / r.c1;
  r.resolvent_ok = std::isfinite(r.ratio) && r.c1 > 0.0 && r.ratio < 1e3;
  r.generates_analytic_semigroup = all;
  return r;
}

struct AdmissibilityReport {
  bool in_W1 = false;
  double margin = 0.0;  // inf_x (w_g + k_g)
  double w_min = 0.0, k_min = 0.0;
  bool in_Vnu = false;
  double vnu_margin = 0.0;  // inf_x (k_f - d_y u_f)
};

inline AdmissibilityReport admissibility(const DtN& d) {
  const InterfaceProfile& p = d.profile();
  const auto& co = d.solver().coefficients_used();
  const int ny = d.solver().ny(), m = p.dim();
  const CMat vy = d.upsilon().dy().trace0();
  AdmissibilityReport r;
  r.margin = r.w_min = r.k_min = std::numeric_limits<double>::infinity();
  for (int c = 0; c < m; ++c)
    for (int i = 0; i < p.nx(); ++i) {
      double w = std::real(vy(i, c) / p.f()(i, c));
      double k = co.alpha(i, c * ny) / co.a22(i, c * ny).real();
      r.margin = std::min(r.margin, w + k);
      r.w_min = std::min(r.w_min, w);
      r.k_min = std::min(r.k_min, k);
    }
  r.in_W1 = r.margin > 0.0;
  // V_nu: u_f with datum f = nu + g, no shift, compared against k_f
  StripSolverOptions opt;
  opt.ny = ny;
  StripSolver s0(p, d.solver().op(), 0.0, Boundary0::Dirichlet, opt);
  StripField uf = s0.solve_K(p.f());
  CMat uy = uf.dy().trace0();
  const CMat fx = p.gx();
  r.vnu_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.nx(); ++i) {
    double fn = p.f().row(i).norm(), fxn = fx.row(i).norm();
    double kf = fn * fn / ((1.0 + fn + fxn * fxn) * (1.0 + fxn * fxn));
    double dyu = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < m; ++c) dyu = std::max(dyu, std::real(-uy(i, c) / p.f()(i, c)));
    r.vnu_margin = std::min(r.vnu_margin, kf - dyu);
  }
  r.in_Vnu = r.vnu_margin > 0.0;
  return r;
}

inline AdmissibilityReport admissibility(const InterfaceProfile& p, const SectorialOperator& A, double mu,
                                         StripSolverOptions opt = {}) {
  return admissibility(DtN(p, A, mu, opt));
}

/// Raised-cosine partition of unity with ceil(1/delta) patches on the torus;
/// each bump is supported on an interval of width 2 delta L.
inline std::vector<RVec> partition_of_unity(const FourierAxis& ax, double delta, std::vector<double>* centers = nullptr) {
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::Domain, "delta must lie in (0, 1]");
  const int J = static_cast<int>(std::ceil(1.0 / delta - 1e-12));
  const double L = ax.length(), s = L / J;
  std::vector<RVec> phis;
  for (int j = 0; j < J; ++j) {
    const double xc = j * s;
    if (centers) centers->push_back(xc);
    RVec phi = RVec::Zero(ax.size());
    for (int i = 0; i < ax.size(); ++i) {
      if (J == 1) {
        phi(i) = 1.0;
        continue;
      }
      double d = detail::grid_distance(ax.nodes()(i), xc, true, L);
      if (d < s) phi(i) = std::pow(std::cos(0.5 * pi * d / s), 2);
    }
    phis.push_back(phi);
  }
  return phis;
}

struct LocalizationReport {
  double delta = 1.0, t = 0.0;
  std::vector<double> centers;
  std::vector<double> residuals;
  std::vector<double> relative;  // residual / |phi_j v|_{h^{2,alpha}(A)}
  double max_residual = 0.0;
  double max_relative = 0.0;
};

/**
 * For each patch j: |[dO_t(g) - O_t(x_j)](phi_j v)|_{h^{1,alpha}(A)} with
 * dO_t = O1 + t (O2 + O3) and O_t(x_j) = O10 + t (O20 + O30) frozen at the
 * node nearest to x_j. The relative residual divides by |phi_j v|_{h^{2,alpha}(A)},
 * the quantity whose small multiple bounds the residual.
 */
inline LocalizationReport localization_residual(const DtN& d, const SectorialOperator& A, double delta,
                                                const CMat& direction, double t, double alpha = 0.5) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorKind::Domain, "t must lie in [0, 1]");
  const InterfaceProfile& p = d.profile();
  const auto& ax = p.axis();
  LocalizationReport r;
  r.delta = delta;
  r.t = t;
  auto phis = partition_of_unity(ax, delta, &r.centers);
  TraceNorms tn(p.axis_ptr(), A, alpha);
  for (std::size_t j = 0; j < phis.size(); ++j) {
    CMat u = phis[j].cast<Complex>().asDiagonal() * direction;
    DerivativeParts dp = d.derivative_parts(u);
    CMat lhs = dp.kpsi + t * (dp.db0 + dp.correct);
    int node = static_cast<int>(std::lround(r.centers[j] / ax.length() * ax.size())) % ax.size();
    FrozenOperatorSet fs = frozen_set(d, node);
    CMat rhs = fs.apply(FrozenPart::O10, u) + t * (fs.apply(FrozenPart::O20, u) + fs.apply(FrozenPart::O30, u));
    double res = tn.h1(lhs - rhs);
    double scale = tn.h2(u);
    r.residuals.push_back(res);
    r.relative.push_back(scale > 0.0 ? res / scale : 0.0);
    r.max_residual = std::max(r.max_residual, res);
    r.max_relative = std::max(r.max_relative, r.relative.back());
  }
  return r;
}

}  // namespace stripflow

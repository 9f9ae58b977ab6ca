#pragma once
/**
 * @brief Variable-coefficient elliptic solves on the strip: the transformed
 *        operator B(g) + mu^2 with Dirichlet or oblique rows on y = 0 and the
 *        Neumann-type row b21 dv/dy on y = 1.
 *
 * The full collocation operator is applied matrix-free (dense spectral
 * derivatives in x, Chebyshev in y) and inverted by GMRES, preconditioned per
 * Fourier mode with the x-averaged coefficients.
 */
#include "geometry.hpp"
#include "linear_solve.hpp"

namespace stripflow {

enum class Boundary0 { Dirichlet, Oblique };

struct StripSolverOptions {
  int ny = 33;
  double tol = 1e-12;
  int max_iter = 900;
  int restart = 60;
};

/// Directional Hoelder surrogate of a field on the strip: sup over nodes plus
/// the largest x-line and y-line seminorms.
inline double strip_holder_norm(const StripField& v, double alpha, const ValueNorm& norm = {}) {
  const int nx = v.nx(), ny = v.ny(), m = v.dim();
  double sup = 0.0, semi = 0.0;
  CMat line(nx, m), col(ny, m);
  for (int j = 0; j < ny; ++j) {
    line = v.trace(j);
    auto r = detail::holder_sweep(v.x_axis().nodes(), line, true, v.x_axis().length(), alpha, norm);
    sup = std::max(sup, r.sup_norm);
    semi = std::max(semi, r.seminorm);
  }
  for (int i = 0; i < nx; ++i) {
    for (int c = 0; c < m; ++c) col.col(c) = v.comp(c).row(i).transpose();
    auto r = detail::holder_sweep(v.y_axis().nodes(), col, false, 0.0, alpha, norm);
    semi = std::max(semi, r.seminorm);
  }
  return sup + semi;
}

class StripSolver {
 public:
  StripSolver(const InterfaceProfile& p, const SectorialOperator& A, double mu,
              Boundary0 bc0 = Boundary0::Dirichlet, StripSolverOptions opt = {})
      : profile_(p), A_(A), mu_(mu), bc0_(bc0), opt_(opt),
        coef_(coefficients(p, chebyshev_axis(opt.ny))) {
    if (A.dim() != p.dim()) throw Error(ErrorKind::Domain, "operator and profile dimensions differ");
    if (!(mu >= 0.0)) throw Error(ErrorKind::Domain, "mu must be >= 0");
    ellipticity_ = ellipticity_floor(coef_);
    if (!ellipticity_.pass)
      throw Error(ErrorKind::Ellipticity, "transformed operator is not elliptic for this profile");
    build_preconditioner();
  }

  const InterfaceProfile& profile() const { return profile_; }
  const SectorialOperator& op() const { return A_; }
  const TransformedCoefficients& coefficients_used() const { return coef_; }
  const EllipticityReport& ellipticity() const { return ellipticity_; }
  double mu() const { return mu_; }
  int ny() const { return coef_.y->size(); }
  std::shared_ptr<const ChebyshevAxis> y_axis() const { return coef_.y; }
  double last_residual() const { return last_residual_; }
  int last_iterations() const { return last_iterations_; }

  StripField zero_field() const { return StripField(coef_.x, coef_.y, profile_.dim()); }

  /// (B(g) + mu^2) v at interior nodes, without boundary rows.
  StripField interior(const StripField& v) const {
    StripField vx = v.dx();
    StripField out = v.apply_matrix(A_.matrix());
    out.data() += (mu_ * mu_) * v.data();
    out.data() -= v.dxx().data();
    out.data().array() -= 2.0 * coef_.a12.array() * vx.dy().data().array();
    out.data().array() -= coef_.a22.array() * v.dyy().data().array();
    out.data().array() += coef_.a2.array() * v.dy().data().array();
    return out;
  }

  /// B0(g) v = b10 dv/dx + b20 dv/dy on y = 0.
  CMat b0(const StripField& v) const {
    return coef_.b10.cwiseProduct(v.dx().trace0()) + coef_.b20.cwiseProduct(v.dy().trace0());
  }
  /// B1(g) v = b21 dv/dy on y = 1.
  CMat b1(const StripField& v) const { return coef_.b21.cwiseProduct(v.dy().trace1()); }

  /// Full collocation operator: interior rows, then boundary rows at y = 0, 1.
  StripField apply(const StripField& v) const {
    StripField out = interior(v);
    out.set_trace(0, bc0_ == Boundary0::Dirichlet ? v.trace0() : b0(v));
    out.set_trace(ny() - 1, b1(v));
    return out;
  }

  /// Solves apply(v) = rhs, where rhs carries boundary data in rows y = 0, 1.
  StripField solve(const StripField& rhs) const {
    const StripField shape = zero_field();
    LinearMap op = [&](const CVec& x) { return apply(shape.like(x)).flatten(); };
    LinearMap pc = [&](const CVec& x) { return precondition(shape.like(x)).flatten(); };
    GmresOptions go{opt_.tol, opt_.restart, opt_.max_iter};
    GmresResult r = gmres(op, pc, rhs.flatten(), CVec(), go);
    last_residual_ = r.residual;
    last_iterations_ = r.iterations;
    if (!r.converged || !r.x.allFinite())
      throw SolverError("strip solve did not converge (relative residual " + std::to_string(r.residual) + ")",
                        mu_);
    return shape.like(r.x);
  }

  /// K: (B + mu^2) v = 0, v = psi on y = 0, B1 v = 0 on y = 1.
  StripField solve_K(const CMat& psi) const {
    require_dirichlet();
    StripField rhs = zero_field();
    rhs.set_trace(0, psi);
    return solve(rhs);
  }

  /// S: (B + mu^2) w = F, w = 0 on y = 0, B1 w = 0 on y = 1.
  StripField solve_S(const StripField& F) const {
    require_dirichlet();
    StripField rhs = F;
    rhs.set_trace(0, CMat::Zero(profile_.nx(), profile_.dim()));
    rhs.set_trace(ny() - 1, CMat::Zero(profile_.nx(), profile_.dim()));
    return solve(rhs);
  }

  /// Full boundary-value problem with data on both boundaries. The row on y = 1
  /// carries (nu + g) B1 v = psi1, i.e. dv/dy = psi1.
  StripField solve_bvp(const StripField& F, const CMat& psi0, const CMat& psi1) const {
    StripField rhs = F;
    rhs.set_trace(0, psi0);
    rhs.set_trace(ny() - 1, coef_.b21.cwiseProduct(psi1));
    return solve(rhs);
  }

  /// Relative residual of apply(v) against rhs, maximum norm.
  double residual(const StripField& v, const StripField& rhs) const {
    double scale = std::max(rhs.max_abs(), 1e-300);
    return (apply(v) - rhs).max_abs() / scale;
  }

  StripField precondition(const StripField& r) const {
    const FourierAxis& ax = *coef_.x;
    CMat hat = ax.forward() * r.data();
    const int nx = ax.size();
    parallel_for(nx, [&](int lo, int hi) {
      for (int k = lo; k < hi; ++k) {
        CVec row = hat.row(k).transpose();
        hat.row(k) = lu_[k].solve(row).transpose();
      }
    });
    return StripField(coef_.x, coef_.y, profile_.dim(), ax.inverse() * hat);
  }

 private:
  void require_dirichlet() const {
    if (bc0_ != Boundary0::Dirichlet) throw Error(ErrorKind::Domain, "K and S need the Dirichlet row on y = 0");
  }

  void build_preconditioner() {
    const FourierAxis& ax = *coef_.x;
    const ChebyshevAxis& ay = *coef_.y;
    const int nx = ax.size(), ny = ay.size(), m = profile_.dim(), n = ny * m;
    CVec m12 = coef_.a12.colwise().mean().transpose();
    CVec m22 = coef_.a22.colwise().mean().transpose();
    CVec m2 = coef_.a2.colwise().mean().transpose();
    CVec b10 = coef_.b10.colwise().mean().transpose();
    CVec b20 = coef_.b20.colwise().mean().transpose();
    CVec b21 = coef_.b21.colwise().mean().transpose();
    lu_.resize(nx);
    parallel_for(nx, [&](int lo, int hi) {
      for (int k = lo; k < hi; ++k) {
        const Complex ik = I_unit * ax.first_derivative_wavenumber(k);
        const double k2 = ax.wavenumber(k) * ax.wavenumber(k);
        CMat M = CMat::Zero(n, n);
        for (int c = 0; c < m; ++c) {
          auto blk = M.block(c * ny, c * ny, ny, ny);
          for (int j = 0; j < ny; ++j) {
            const int col = c * ny + j;
            blk.row(j) = -2.0 * m12(col) * ik * ay.d1().row(j) - m22(col) * ay.d2().row(j) + m2(col) * ay.d1().row(j);
            blk(j, j) += k2 + mu_ * mu_;
          }
          for (int d = 0; d < m; ++d)
            for (int j = 0; j < ny; ++j) M(c * ny + j, d * ny + j) += A_.matrix()(c, d);
        }
        for (int c = 0; c < m; ++c) {
          const int r0 = c * ny, r1 = c * ny + ny - 1;
          M.row(r0).setZero();
          M.row(r1).setZero();
          if (bc0_ == Boundary0::Dirichlet) {
            M(r0, r0) = 1.0;
          } else {
            M.block(r0, c * ny, 1, ny) = b20(c) * ay.d1().row(0);
            M(r0, r0) += b10(c) * ik;
          }
          M.block(r1, c * ny, 1, ny) = b21(c) * ay.d1().row(ny - 1);
        }
        lu_[k].compute(M);
      }
    });
  }

  InterfaceProfile profile_;
  SectorialOperator A_;
  double mu_;
  Boundary0 bc0_;
  StripSolverOptions opt_;
  TransformedCoefficients coef_;
  EllipticityReport ellipticity_;
  std::vector<Eigen::PartialPivLU<CMat>> lu_;
  mutable double last_residual_ = 0.0;
  mutable int last_iterations_ = 0;
};

inline StripSolver assemble(const InterfaceProfile& p, const SectorialOperator& A, double mu,
                            Boundary0 bc0 = Boundary0::Dirichlet, StripSolverOptions opt = {}) {
  return StripSolver(p, A, mu, bc0, opt);
}

inline StripField solve_K(const InterfaceProfile& p, const SectorialOperator& A, double mu, const CMat& psi,
                          StripSolverOptions opt = {}) {
  return StripSolver(p, A, mu, Boundary0::Dirichlet, opt).solve_K(psi);
}

inline StripField solve_S(const InterfaceProfile& p, const SectorialOperator& A, double mu, const StripField& F,
                          StripSolverOptions opt = {}) {
  return StripSolver(p, A, mu, Boundary0::Dirichlet, opt).solve_S(F);
}

struct StripData {
  StripField F;
  CMat psi0, psi1;
};

struct CoercivityRow {
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
};

struct CoercivityReport33 {
  double mu = 0.0;
  int nx = 0, ny = 0;
  std::vector<CoercivityRow> rows;
  double max_ratio = 0.0;
};

/**
 * Ratio of |u|_Y to the data side of the coercive strip estimate. |u|_Y sums
 * the directional Hoelder norms of u, its first and second derivatives and Au;
 * the data side is |(B + mu^2) u|_X + |psi0|_{h^{2,alpha}} + |psi1|_{h^{1,alpha}}.
 */
inline CoercivityReport33 coercivity_probe_33(const InterfaceProfile& p, const SectorialOperator& A, double mu,
                                              const std::vector<StripData>& ensemble, double alpha = 0.5,
                                              StripSolverOptions opt = {}) {
  if (ensemble.empty()) throw Error(ErrorKind::Domain, "coercivity probe needs a nonempty ensemble");
  StripSolver solver(p, A, mu, Boundary0::Dirichlet, opt);
  CoercivityReport33 rep;
  rep.mu = mu;
  rep.nx = p.nx();
  rep.ny = solver.ny();
  const ValueNorm e;
  for (const auto& d : ensemble) {
    if (d.F.max_abs() == 0.0 && d.psi0.cwiseAbs().maxCoeff() == 0.0 && d.psi1.cwiseAbs().maxCoeff() == 0.0)
      throw Error(ErrorKind::Domain, "zero data is excluded from the coercivity probe");
    StripField u = solver.solve_bvp(d.F, d.psi0, d.psi1);
    StripField ux = u.dx(), uy = u.dy();
    double lhs = strip_holder_norm(u, alpha, e) + strip_holder_norm(ux, alpha, e) + strip_holder_norm(uy, alpha, e) +
                 strip_holder_norm(u.dxx(), alpha, e) + strip_holder_norm(ux.dy(), alpha, e) +
                 strip_holder_norm(u.dyy(), alpha, e) + strip_holder_norm(u.apply_matrix(A.matrix()), alpha, e);
    auto sp = SampledFunction::on_torus(p.axis(), d.psi0);
    auto s1 = SampledFunction::on_torus(p.axis(), d.psi1);
    double rhs = strip_holder_norm(solver.interior(u), alpha, e) + hk_alpha_norm(sp, 2, alpha, e) +
                 hk_alpha_norm(s1, 1, alpha, e);
    CoercivityRow row{lhs, rhs, lhs / rhs};
    rep.rows.push_back(row);
    rep.max_ratio = std::max(rep.max_ratio, row.ratio);
  }
  return rep;
}

}  // namespace stripflow

#pragma once
/**
 * @brief Constant-coefficient half-plane problems: the decay generator Lambda,
 *        the multiplier solution exp(-Lambda y) of the Dirichlet problem, the
 *        multiplier profiles and the reflected inhomogeneous solve.
 *
 * Sign convention: a Fourier mode exp(i k x) corresponds to eta = -k in the
 * operator quadratic -a22 L^2 - 2 i a12 eta L + (A + mu^2 + eta^2) = 0.
 */
#include "strip_solver.hpp"

#include <array>

namespace stripflow {

struct FrozenCoefficients {
  RVec a12, a22;  // one entry per E component
  SectorialOperator A;
  double mu = 0.0;
  double mu_min = 0.0;  // coercivity threshold for the inhomogeneous solve

  FrozenCoefficients(double a12s, double a22s, SectorialOperator op, double mu_ = 0.0, double mu_min_ = 0.0)
      : FrozenCoefficients(RVec::Constant(op.dim(), a12s), RVec::Constant(op.dim(), a22s), op, mu_, mu_min_) {}
  FrozenCoefficients(RVec a12v, RVec a22v, SectorialOperator op, double mu_ = 0.0, double mu_min_ = 0.0)
      : a12(std::move(a12v)), a22(std::move(a22v)), A(std::move(op)), mu(mu_), mu_min(mu_min_) {
    if (a12.size() != A.dim() || a22.size() != A.dim())
      throw Error(ErrorKind::Domain, "frozen coefficients need one entry per component");
    if (!(mu >= 0.0)) throw Error(ErrorKind::Domain, "mu must be >= 0");
    for (int c = 0; c < A.dim(); ++c) {
      if (!(a22(c) > 0.0)) throw Error(ErrorKind::Ellipticity, "a22 must be > 0");
      if (!(a22(c) - a12(c) * a12(c) > 0.0)) throw Error(ErrorKind::Ellipticity, "a22 - a12^2 must be > 0");
    }
  }

  FrozenCoefficients with_mu(double m) const {
    FrozenCoefficients f = *this;
    if (!(m >= 0.0)) throw Error(ErrorKind::Domain, "mu must be >= 0");
    f.mu = m;
    return f;
  }

  bool uniform() const {
    return (a12.array() == a12(0)).all() && (a22.array() == a22(0)).all();
  }

  int dim() const { return A.dim(); }

  CMat A_mu(double eta) const {
    return A.matrix() + (mu * mu + eta * eta) * CMat::Identity(dim(), dim());
  }
};

struct DecayGenerator {
  double eta = 0.0;
  CMat Lambda;
};

/// |-a22 L^2 - 2 i a12 eta L + A_mu| relative to |A_mu|.
inline double quadratic_residual(const FrozenCoefficients& fc, const DecayGenerator& d) {
  const CMat D12 = fc.a12.cast<Complex>().asDiagonal(), D22 = fc.a22.cast<Complex>().asDiagonal();
  const CMat Am = fc.A_mu(d.eta);
  CMat r = -D22 * d.Lambda * d.Lambda - 2.0 * I_unit * d.eta * D12 * d.Lambda + Am;
  return op_norm(r) / op_norm(Am);
}

inline DecayGenerator decay_generator(const FrozenCoefficients& fc, double eta) {
  const int m = fc.dim();
  DecayGenerator out{eta, CMat()};
  if (fc.uniform()) {
    const double a12 = fc.a12(0), a22 = fc.a22(0);
    CMat arg = a22 * fc.A_mu(eta) - a12 * a12 * eta * eta * CMat::Identity(m, m);
    CVec ev = Eigen::ComplexEigenSolver<CMat>(arg, false).eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i).real() <= 0.0 && std::abs(ev(i).imag()) <= 1e-12 * std::max(1.0, std::abs(ev(i))))
        throw Error(ErrorKind::Ellipticity, "square-root argument touches the branch cut");
    CMat root = arg.sqrt();
    out.Lambda = (root - I_unit * a12 * eta * CMat::Identity(m, m)) / a22;
  } else {
    // companion form for v'' = D22^{-1} (A_mu v + 2 i eta D12 v'); the decaying
    // invariant subspace [V1; V2] gives Lambda = -V2 V1^{-1}
    CMat C = CMat::Zero(2 * m, 2 * m);
    CMat inv22 = fc.a22.cwiseInverse().cast<Complex>().asDiagonal();
    C.topRightCorner(m, m) = CMat::Identity(m, m);
    C.bottomLeftCorner(m, m) = inv22 * fc.A_mu(eta);
    C.bottomRightCorner(m, m) = 2.0 * I_unit * eta * inv22 * fc.a12.cast<Complex>().asDiagonal();
    Eigen::ComplexEigenSolver<CMat> es(C);
    std::vector<int> idx;
    for (int i = 0; i < 2 * m; ++i)
      if (es.eigenvalues()(i).real() < 0.0) idx.push_back(i);
    if (static_cast<int>(idx.size()) != m)
      throw Error(ErrorKind::Ellipticity, "companion spectrum does not split evenly across the imaginary axis");
    CMat V1(m, m), V2(m, m);
    for (int k = 0; k < m; ++k) {
      V1.col(k) = es.eigenvectors().col(idx[k]).head(m);
      V2.col(k) = es.eigenvectors().col(idx[k]).tail(m);
    }
    out.Lambda = -V2 * V1.partialPivLu().inverse();
  }
  if (!all_finite(out.Lambda)) throw Error(ErrorKind::Ellipticity, "decay generator is not finite");
  return out;
}

/// Multiplier N(eta, y) = exp(-Lambda y).
inline CMat multiplier(const DecayGenerator& d, double y) {
  CMat arg = -y * d.Lambda;
  return arg.exp();
}

struct HalfPlaneSolution {
  StripField u, uy, uyy;  // y-derivatives from the generator, not by collocation
  bool unresolved = false;
};

/// u = F^{-1} exp(-Lambda(-k) y) F psi on the Chebyshev nodes of [0, Y].
inline HalfPlaneSolution halfplane_dirichlet_solve(const FrozenCoefficients& fc, std::shared_ptr<const FourierAxis> ax,
                                                   const CMat& psi, std::shared_ptr<const ChebyshevAxis> y) {
  const int nx = ax->size(), ny = y->size(), m = fc.dim();
  if (psi.rows() != nx || psi.cols() != m) throw Error(ErrorKind::Domain, "datum has the wrong shape");
  HalfPlaneSolution out{StripField(ax, y, m), StripField(ax, y, m), StripField(ax, y, m), false};
  out.unresolved = ax->spectral_tail(psi) > 1e-6;
  CMat hat = ax->forward() * psi;
  CMat uh = CMat::Zero(nx, ny * m), uyh = uh, uyyh = uh;
  parallel_for(nx, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      CVec p = hat.row(k).transpose();
      if (p.norm() == 0.0) continue;
      DecayGenerator d = decay_generator(fc, -ax->wavenumber(k));
      for (int j = 0; j < ny; ++j) {
        CVec v = multiplier(d, y->nodes()(j)) * p;
        CVec vy = -d.Lambda * v, vyy = -d.Lambda * vy;
        for (int c = 0; c < m; ++c) {
          uh(k, c * ny + j) = v(c);
          uyh(k, c * ny + j) = vy(c);
          uyyh(k, c * ny + j) = vyy(c);
        }
      }
    }
  });
  out.u.data() = ax->inverse() * uh;
  out.uy.data() = ax->inverse() * uyh;
  out.uyy.data() = ax->inverse() * uyyh;
  // the discrete transform reproduces psi exactly on y = 0
  out.u.set_trace(0, psi);
  return out;
}

/// Default truncation depth 10 / sqrt(1 + mu^2 + lambda_min(A)).
inline double default_depth(const FrozenCoefficients& fc) {
  return 10.0 / std::sqrt(1.0 + fc.mu * fc.mu + fc.A.min_real_eigenvalue());
}

/// eta grid: integers in [-64, 64] plus a x4 refinement on [-1, 1].
inline std::vector<double> default_eta_grid() {
  std::vector<double> eta;
  for (int i = -64; i <= 64; ++i) eta.push_back(i);
  for (int i = -3; i <= 3; ++i)
    if (i % 4) eta.push_back(0.25 * i);
  std::sort(eta.begin(), eta.end());
  return eta;
}

struct MultiplierProfiles {
  std::vector<double> y;
  std::vector<double> phi0;
  std::array<std::vector<double>, 3> phi;  // j = 0, 1, 2
  double omega = 0.0;                      // fitted decay rate of phi0 over the tail
};

/**
 * Phi0(y) = max_eta |A N| + (1+|eta|)^{1/2} |d/deta (A N)| and
 * Phi_j(y) = max_eta |mu|^{2-j} |eta|^j (|N| + (1+|eta|)^{1/2} |d/deta N|),
 * with the eta-derivative by central differences.
 */
inline MultiplierProfiles multiplier_profiles(const FrozenCoefficients& fc, const std::vector<double>& y,
                                              const std::vector<double>& etas = default_eta_grid()) {
  for (double v : y)
    if (!(v > 0.0)) throw Error(ErrorKind::Domain, "profile abscissae must be > 0");
  MultiplierProfiles out;
  out.y = y;
  out.phi0.assign(y.size(), 0.0);
  for (auto& p : out.phi) p.assign(y.size(), 0.0);
  const double h = 1e-5;
  const CMat& A = fc.A.matrix();
  for (double eta : etas) {
    DecayGenerator d0 = decay_generator(fc, eta), dp = decay_generator(fc, eta + h), dm = decay_generator(fc, eta - h);
    const double w = std::sqrt(1.0 + std::abs(eta));
    for (std::size_t i = 0; i < y.size(); ++i) {
      CMat N = multiplier(d0, y[i]);
      CMat dN = (multiplier(dp, y[i]) - multiplier(dm, y[i])) / (2.0 * h);
      out.phi0[i] = std::max(out.phi0[i], op_norm(A * N) + w * op_norm(A * dN));
      double base = op_norm(N) + w * op_norm(dN);
      for (int j = 0; j < 3; ++j)
        out.phi[j][i] = std::max(out.phi[j][i], std::pow(fc.mu, 2 - j) * std::pow(std::abs(eta), j) * base);
    }
  }
  // decay rate from the last half of the profile
  std::vector<double> ty, tl;
  for (std::size_t i = y.size() / 2; i < y.size(); ++i)
    if (out.phi0[i] > 0.0) {
      ty.push_back(y[i]);
      tl.push_back(std::log(out.phi0[i]));
    }
  if (ty.size() >= 2) {
    double my = 0, ml = 0, sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < ty.size(); ++i) { my += ty[i]; ml += tl[i]; }
    my /= ty.size();
    ml /= ty.size();
    for (std::size_t i = 0; i < ty.size(); ++i) {
      sxy += (ty[i] - my) * (tl[i] - ml);
      sxx += (ty[i] - my) * (ty[i] - my);
    }
    out.omega = -sxy / sxx;
  }
  return out;
}

/**
 * u = S1 V + S2 (psi - u1(., 0)): S1 inverts p(xi) + A + mu^2 on the even
 * reflection of V across y = 0 (periodized on [-Y, Y) with `ny_uniform`
 * samples), S2 is the Dirichlet multiplier solve.
 */
inline StripField halfplane_inhomogeneous_solve(const FrozenCoefficients& fc, const StripField& V, const CMat& psi,
                                                int ny_uniform = 1024) {
  if (fc.mu < fc.mu_min)
    throw SolverError("mu is below the coercivity threshold of the inhomogeneous solve", fc.mu);
  const FourierAxis& ax = V.x_axis();
  const ChebyshevAxis& ay = V.y_axis();
  const int nx = ax.size(), ny = ay.size(), m = fc.dim(), n = ny_uniform;
  const double Y = ay.length(), period = 2.0 * Y;
  // uniform samples s_l = -Y + l * period / n of the even extension
  Eigen::MatrixXd P(n, ny);
  for (int l = 0; l < n; ++l) P.row(l) = ay.interpolation_row(std::abs(-Y + period * l / n)).transpose();
  std::vector<Complex> twiddle(n);
  for (int q = 0; q < n; ++q) twiddle[q] = std::polar(1.0, -2.0 * pi * q / n);
  auto xi_of = [&](int q) { return 2.0 * pi * (q <= n / 2 ? q : q - n) / period; };
  CMat vhat = ax.forward() * V.data();
  CMat u1 = CMat::Zero(nx, ny * m);
  const CMat& A = fc.A.matrix();
  parallel_for(nx, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      const double kx = ax.wavenumber(k);
      CMat samp(n, m);
      for (int c = 0; c < m; ++c)
        samp.col(c) = P.cast<Complex>() * vhat.row(k).segment(c * ny, ny).transpose();
      if (samp.cwiseAbs().maxCoeff() == 0.0) continue;
      CMat coef(n, m);
      for (int q = 0; q < n; ++q) {
        CVec acc = CVec::Zero(m);
        for (int l = 0; l < n; ++l)
          acc += twiddle[(static_cast<long long>(q) * l) % n] * samp.row(l).transpose();
        const double xi = xi_of(q);
        // samples start at -Y, so shift the phase back to the origin
        acc *= std::polar(1.0, xi * Y) / static_cast<double>(n);
        CMat sym = A + fc.mu * fc.mu * CMat::Identity(m, m);
        for (int c = 0; c < m; ++c) sym(c, c) += kx * kx + 2.0 * fc.a12(c) * kx * xi + fc.a22(c) * xi * xi;
        coef.row(q) = sym.partialPivLu().solve(acc).transpose();
      }
      for (int j = 0; j < ny; ++j) {
        const double yj = ay.nodes()(j);
        CVec acc = CVec::Zero(m);
        for (int q = 0; q < n; ++q) {
          const double xi = xi_of(q);
          Complex e = q == n / 2 ? Complex(std::cos(xi * yj), 0.0) : std::polar(1.0, xi * yj);
          acc += e * coef.row(q).transpose();
        }
        for (int c = 0; c < m; ++c) u1(k, c * ny + j) = acc(c);
      }
    }
  });
  StripField out(V.x_axis_ptr(), V.y_axis_ptr(), m, ax.inverse() * u1);
  CMat corr = psi - out.trace0();
  HalfPlaneSolution d = halfplane_dirichlet_solve(fc, V.x_axis_ptr(), corr, V.y_axis_ptr());
  out += d.u;
  out.set_trace(0, psi);
  return out;
}

struct CoercivityRow59 {
  double mu = 0.0;
  int nx = 0;
  double lhs = 0.0, rhs = 0.0, ratio = 0.0;
};

struct CoercivityReport59 {
  std::vector<CoercivityRow59> rows;
  double max_ratio = 0.0;
  double mu_spread = 0.0;  // max/min of the per-mu maximum ratio
};

/**
 * Ratio of sum_j |mu|^{2-j} |d_x^j u| + sum |d^2 u| + |Au| (directional Hoelder
 * norms on [0, Y]) to |psi|_{h^{2,alpha}(A)} for the half-plane Dirichlet solution.
 */
inline CoercivityReport59 coercivity_probe_59(const FrozenCoefficients& fc, std::shared_ptr<const FourierAxis> ax,
                                              const std::vector<CMat>& ensemble, const std::vector<double>& mus,
                                              double alpha = 0.5, int ny = 33) {
  if (ensemble.empty() || mus.empty()) throw Error(ErrorKind::Domain, "coercivity probe needs data and mu values");
  CoercivityReport59 rep;
  const ValueNorm e;
  TraceNorms tn(ax, fc.A, alpha);
  std::vector<double> per_mu;
  for (double mu : mus) {
    FrozenCoefficients f = fc.with_mu(mu);
    auto y = chebyshev_axis(ny, default_depth(f));
    double best = 0.0;
    for (const CMat& psi : ensemble) {
      if (psi.cwiseAbs().maxCoeff() == 0.0) throw Error(ErrorKind::Domain, "zero datum is excluded");
      HalfPlaneSolution s = halfplane_dirichlet_solve(f, ax, psi, y);
      StripField ux = s.u.dx();
      double lhs = mu * mu * strip_holder_norm(s.u, alpha, e) + mu * strip_holder_norm(ux, alpha, e) +
                   strip_holder_norm(s.u.dxx(), alpha, e);
      lhs += strip_holder_norm(s.u.dxx(), alpha, e) + 2.0 * strip_holder_norm(s.uy.dx(), alpha, e) +
             strip_holder_norm(s.uyy, alpha, e);
      lhs += strip_holder_norm(s.u.apply_matrix(f.A.matrix()), alpha, e);
      double rhs = tn.h2(psi);
      CoercivityRow59 row{mu, ax->size(), lhs, rhs, lhs / rhs};
      rep.rows.push_back(row);
      rep.max_ratio = std::max(rep.max_ratio, row.ratio);
      best = std::max(best, row.ratio);
    }
    per_mu.push_back(best);
  }
  rep.mu_spread = *std::max_element(per_mu.begin(), per_mu.end()) / *std::min_element(per_mu.begin(), per_mu.end());
  return rep;
}

}  // namespace stripflow

#pragma once
/**
 * @brief Restarted GMRES with left preconditioning, used matrix-free for the
 *        strip collocation systems and the implicit trace-space step.
 */
#include "core.hpp"

namespace stripflow {

using LinearMap = std::function<CVec(const CVec&)>;

struct GmresOptions {
  double tol = 1e-12;  // on the preconditioned residual, relative to |M^-1 b|
  int restart = 60;
  int max_iter = 900;
};

struct GmresResult {
  CVec x;
  int iterations = 0;
  double residual = 0.0;       // true relative residual |b - Ax| / |b|
  double prec_residual = 0.0;  // preconditioned relative residual
  bool converged = false;
};

inline GmresResult gmres(const LinearMap& A, const LinearMap& M, const CVec& b, CVec x0 = CVec(),
                         const GmresOptions& opt = {}) {
  const Eigen::Index n = b.size();
  GmresResult res;
  res.x = x0.size() == n ? std::move(x0) : CVec::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.x.setZero();
    res.converged = true;
    return res;
  }
  const double pb = M(b).norm();
  const int mdim = std::max(1, opt.restart);
  std::vector<CVec> V;
  CMat H;
  CVec cs, sn, s;
  while (res.iterations < opt.max_iter) {
    CVec r = M(b - A(res.x));
    double beta = r.norm();
    res.prec_residual = beta / pb;
    if (res.prec_residual <= opt.tol) {
      res.converged = true;
      break;
    }
    V.assign(1, r / beta);
    H = CMat::Zero(mdim + 1, mdim);
    cs = CVec::Zero(mdim);
    sn = CVec::Zero(mdim);
    s = CVec::Zero(mdim + 1);
    s(0) = beta;
    int k = 0;
    for (; k < mdim && res.iterations < opt.max_iter; ++k, ++res.iterations) {
      CVec w = M(A(V[k]));
      // modified Gram-Schmidt, twice for stability
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= k; ++i) {
          Complex h = V[i].dot(w);
          H(i, k) += h;
          w -= h * V[i];
        }
      H(k + 1, k) = w.norm();
      for (int i = 0; i < k; ++i) {
        Complex t = std::conj(cs(i)) * H(i, k) + std::conj(sn(i)) * H(i + 1, k);
        H(i + 1, k) = -sn(i) * H(i, k) + cs(i) * H(i + 1, k);
        H(i, k) = t;
      }
      double den = std::hypot(std::abs(H(k, k)), std::abs(H(k + 1, k)));
      if (den == 0.0) {
        cs(k) = 1.0;
        sn(k) = 0.0;
      } else {
        cs(k) = H(k, k) / den;
        sn(k) = H(k + 1, k) / den;
      }
      H(k, k) = den;
      H(k + 1, k) = 0.0;
      s(k + 1) = -sn(k) * s(k);
      s(k) = std::conj(cs(k)) * s(k);
      const double hk1 = w.norm();
      if (hk1 > 0.0) V.push_back(w / hk1);
      if (std::abs(s(k + 1)) / pb <= opt.tol || hk1 == 0.0) {
        ++k;
        ++res.iterations;
        break;
      }
    }
    CVec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(s.head(k));
    for (int i = 0; i < k; ++i) res.x += y(i) * V[i];
  }
  CVec r = b - A(res.x);
  res.residual = r.norm() / bnorm;
  if (!res.converged) {
    res.prec_residual = M(r).norm() / pb;
    res.converged = res.prec_residual <= opt.tol;
  }
  return res;
}

}  // namespace stripflow

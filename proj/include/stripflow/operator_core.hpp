#pragma once
/**
 * @brief Finite-dimensional realization of a positive (sectorial) operator on
 *        E = C^m: resolvents, fractional powers, the generated semigroup and
 *        the discrete interpolation-space norm of D_A(theta, infinity).
 *
 * Every function is pure; SectorialOperator is an immutable value.
 */
#include "core.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <optional>

namespace stripflow {

class SectorialOperator {
 public:
  SectorialOperator(CMat entries, double sector_angle, double bound)
      : entries_(std::move(entries)), phi_(sector_angle), bound_(bound) {
    if (entries_.rows() == 0 || entries_.rows() != entries_.cols())
      throw Error(ErrorKind::Domain, "operator matrix must be square and non-empty");
    if (!all_finite(entries_)) throw Error(ErrorKind::Domain, "operator entries must be finite");
    if (!(phi_ >= 0.0 && phi_ < pi)) throw Error(ErrorKind::Domain, "sector angle must lie in [0, pi)");
    if (!(bound_ > 0.0)) throw Error(ErrorKind::Domain, "positivity bound M must be > 0");
  }

  static SectorialOperator scalar(double a, double sector_angle = pi / 2, double bound = 2.0) {
    return SectorialOperator(CMat::Constant(1, 1, Complex(a, 0.0)), sector_angle, bound);
  }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const CMat& matrix() const { return entries_; }
  double sector_angle() const { return phi_; }
  double bound() const { return bound_; }

  CVec eigenvalues() const { return Eigen::ComplexEigenSolver<CMat>(entries_, false).eigenvalues(); }

  double min_real_eigenvalue() const { return eigenvalues().real().minCoeff(); }

 private:
  CMat entries_;
  double phi_;
  double bound_;
};

struct PositivityReport {
  bool pass = false;
  double worst_ratio = 0.0;
  Complex witness{0.0, 0.0};
  double min_real_eigenvalue = 0.0;
  bool singular_hit = false;
  std::string message;
};

/// Default sample grid on S(phi): `rays` rays evenly spaced in [-phi, phi],
/// `radii` log-spaced radii in [r_min, r_max], plus lambda = 0.
inline std::vector<Complex> sector_samples(double phi, int rays = 7, int radii = 24,
                                           double r_min = 1e-3, double r_max = 1e6) {
  std::vector<Complex> out{Complex(0.0, 0.0)};
  for (int a = 0; a < rays; ++a) {
    double ang = rays == 1 ? 0.0 : -phi + 2.0 * phi * a / (rays - 1);
    for (int r = 0; r < radii; ++r) {
      double rad = radii == 1 ? r_min
                              : r_min * std::pow(r_max / r_min, static_cast<double>(r) / (radii - 1));
      out.push_back(std::polar(rad, ang));
    }
  }
  return out;
}

/// (A + lambda I)^{-1}. Throws SingularError when lambda hits the spectrum.
inline CMat resolvent(const SectorialOperator& A, Complex lambda) {
  const int m = A.dim();
  CMat shifted = A.matrix() + lambda * CMat::Identity(m, m);
  Eigen::FullPivLU<CMat> lu(shifted);
  // rcond-style test: FullPivLU pivots give a reliable rank decision
  lu.setThreshold(1e-14);
  if (!lu.isInvertible())
    throw SingularError("A + lambda I is singular", lambda);
  CMat r = lu.inverse();
  if (!all_finite(r)) throw SingularError("resolvent is not finite", lambda);
  double kappa = op_norm(shifted) * op_norm(r);
  if (!std::isfinite(kappa) || kappa > 1e15) throw SingularError("A + lambda I is numerically singular", lambda);
  return r;
}

inline PositivityReport validate_sectorial(const SectorialOperator& A, const std::vector<Complex>& samples) {
  if (samples.empty()) throw Error(ErrorKind::Domain, "validate_sectorial needs at least one sample");
  PositivityReport rep;
  rep.min_real_eigenvalue = A.min_real_eigenvalue();
  for (const Complex& lam : samples) {
    if (lam != Complex(0.0, 0.0) && std::abs(std::arg(lam)) > A.sector_angle() + 1e-12)
      throw Error(ErrorKind::Domain, "sample lies outside S(phi)");
    try {
      double ratio = (1.0 + std::abs(lam)) * op_norm(resolvent(A, lam));
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.witness = lam;
      }
    } catch (const SingularError& e) {
      rep.singular_hit = true;
      rep.witness = e.lambda();
      rep.worst_ratio = std::numeric_limits<double>::infinity();
      rep.pass = false;
      rep.message = "A + lambda I singular at a sector sample";
      return rep;
    }
  }
  bool spectrum_ok = rep.min_real_eigenvalue > 0.0;
  rep.pass = spectrum_ok && rep.worst_ratio <= A.bound();
  if (!spectrum_ok)
    rep.message = "spectrum touches the closed left half-plane";
  else if (!rep.pass)
    rep.message = "resolvent ratio exceeds the bound M";
  return rep;
}

inline PositivityReport validate_sectorial(const SectorialOperator& A) {
  return validate_sectorial(A, sector_samples(A.sector_angle()));
}

/**
 * Schur-Parlett evaluation of f(A) for a scalar function f with the principal
 * branch. Throws Defective when two eigenvalues coincide numerically while the
 * Schur factor couples them (f(A) would need derivatives of f there).
 */
template <class F>
CMat schur_parlett(const CMat& a, F&& f) {
  const Eigen::Index n = a.rows();
  Eigen::ComplexSchur<CMat> schur(a);
  const CMat& t = schur.matrixT();
  const CMat& u = schur.matrixU();
  const double scale = std::max(1.0, t.cwiseAbs().maxCoeff());
  const double tol = 1e-12 * scale;
  CMat fT = CMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) fT(i, i) = f(t(i, i));
  for (Eigen::Index d = 1; d < n; ++d) {
    for (Eigen::Index i = 0; i + d < n; ++i) {
      Eigen::Index j = i + d;
      Complex num = t(i, j) * (fT(j, j) - fT(i, i));
      for (Eigen::Index k = i + 1; k < j; ++k) num += fT(i, k) * t(k, j) - t(i, k) * fT(k, j);
      Complex den = t(j, j) - t(i, i);
      if (std::abs(den) <= tol) {
        if (std::abs(t(i, j)) <= tol && std::abs(num) <= tol * std::max(1.0, std::abs(fT(i, i)))) {
          fT(i, j) = 0.0;
          continue;
        }
        throw Error(ErrorKind::Defective,
                    "matrix function requested on a numerically defective matrix");
      }
      fT(i, j) = num / den;
    }
  }
  return u * fT * u.adjoint();
}

/// A^theta on the principal branch.
inline CMat frac_power(const SectorialOperator& A, double theta) {
  if (A.min_real_eigenvalue() <= 0.0)
    throw Error(ErrorKind::Domain, "fractional power needs a spectrum in Re > 0");
  return schur_parlett(A.matrix(), [theta](Complex z) { return std::pow(z, theta); });
}

/// U(t) = exp(-t A).
inline CMat semigroup(const SectorialOperator& A, double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::Domain, "semigroup time must be >= 0");
  if (t == 0.0) return CMat::Identity(A.dim(), A.dim());
  CMat arg = -t * A.matrix();
  return arg.exp();
}

struct InterpolationNormSpec {
  double theta = 0.5;
  std::vector<double> t_grid;

  static InterpolationNormSpec log_spaced(double theta, int points = 96, double t_min = 1e-4) {
    InterpolationNormSpec s;
    s.theta = theta;
    for (int i = 0; i < points; ++i)
      s.t_grid.push_back(t_min * std::pow(1.0 / t_min, static_cast<double>(i) / (points - 1)));
    s.t_grid.back() = 1.0;
    return s;
  }

  void validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) throw Error(ErrorKind::Domain, "theta must lie in (0, 1]");
    if (t_grid.empty()) throw Error(ErrorKind::Domain, "t_grid is empty");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      if (!(t_grid[i] > 0.0 && t_grid[i] <= 1.0)) throw Error(ErrorKind::Domain, "t_grid must lie in (0, 1]");
      if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
        throw Error(ErrorKind::Domain, "t_grid must be strictly increasing");
    }
  }
};

/**
 * Precomputed weights W_t = t^{1-theta} A U(t), so that the discrete
 * D_A(theta, inf) norm of a vector is max_t |W_t u|. Reused by the Hoelder
 * norms, which evaluate it at every node and node pair.
 */
class InterpNorm {
 public:
  InterpNorm(const SectorialOperator& A, const InterpolationNormSpec& spec) {
    spec.validate();
    weights_.reserve(spec.t_grid.size());
    for (double t : spec.t_grid)
      weights_.push_back(std::pow(t, 1.0 - spec.theta) * A.matrix() * semigroup(A, t));
    if (A.dim() == 1) {
      double best = 0.0;
      for (const auto& w : weights_) best = std::max(best, std::abs(w(0, 0)));
      scalar_ = best;
    }
  }

  template <class Vec>
  double operator()(const Vec& u) const {
    if (scalar_) return *scalar_ * std::abs(u(0));
    double best = 0.0;
    for (const auto& w : weights_) best = std::max(best, (w * u).norm());
    return best;
  }

  int dim() const { return static_cast<int>(weights_.front().rows()); }

 private:
  std::vector<CMat> weights_;
  std::optional<double> scalar_;
};

inline double interp_norm(const SectorialOperator& A, const CVec& u, const InterpolationNormSpec& spec) {
  if (u.size() != A.dim()) throw Error(ErrorKind::Domain, "vector dimension does not match the operator");
  return InterpNorm(A, spec)(u);
}

}  // namespace stripflow

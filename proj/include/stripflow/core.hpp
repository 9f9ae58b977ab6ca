#pragma once
/**
 * @brief Shared vocabulary types, error kinds and small numeric helpers.
 */
#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace stripflow {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;
inline constexpr Complex I_unit{0.0, 1.0};

enum class ErrorKind {
  Domain,       // argument outside the documented domain
  Singular,     // a linear system or resolvent is singular
  Defective,    // matrix function requested on a numerically defective matrix
  Degenerate,   // interface height collapses
  Ellipticity,  // transformed operator loses ellipticity
  Solver,       // iterative solve failed to converge
  Schema,       // scenario parse / schema problem
  Validation,   // scenario failed a semantic check
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::Defective: return "defective";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Ellipticity: return "ellipticity";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}
  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

/// Raised when A + lambda I (or a shifted strip system) cannot be inverted.
class SingularError : public Error {
 public:
  SingularError(const std::string& what, Complex lambda)
      : Error(ErrorKind::Singular, what), lambda_(lambda) {}
  Complex lambda() const noexcept { return lambda_; }

 private:
  Complex lambda_;
};

class SolverError : public Error {
 public:
  SolverError(const std::string& what, double mu)
      : Error(ErrorKind::Solver, what), mu_(mu) {}
  double mu() const noexcept { return mu_; }

 private:
  double mu_;
};

/// Worker count cap from STRIPFLOW_THREADS (default 1).
inline int worker_count() {
  const char* env = std::getenv("STRIPFLOW_THREADS");
  if (!env) return 1;
  int n = std::atoi(env);
  return std::clamp(n, 1, 64);
}

/// Splits [0, n) into contiguous chunks. Every index is visited by exactly one
/// worker, so callers that write disjoint slots get identical results for any
/// worker count.
inline void parallel_for(int n, const std::function<void(int, int)>& body) {
  const int workers = std::min(worker_count(), std::max(n, 1));
  if (workers <= 1 || n < 2) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    int lo = w * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(body, lo, hi);
  }
  for (auto& t : pool) t.join();
}

inline bool all_finite(const CMat& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

/// Spectral (2-)norm of a small dense matrix.
inline double op_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(m);
  return svd.singularValues()(0);
}

/// 2-norm condition number; infinity when singular.
inline double condition_number(const CMat& m) {
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& s = svd.singularValues();
  double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace stripflow

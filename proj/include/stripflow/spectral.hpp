#pragma once
/**
 * @brief Spectral axes: a periodic Fourier axis in x and a Chebyshev-Gauss-Lobatto
 *        axis in y, with dense differentiation matrices and interpolation.
 */
#include "core.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace stripflow {

class FourierAxis {
 public:
  FourierAxis(int n, double length) : n_(n), length_(length) {
    if (n < 4 || (n & (n - 1)) != 0) throw Error(ErrorKind::Domain, "Fourier axis size must be a power of two >= 4");
    if (!(length > 0.0)) throw Error(ErrorKind::Domain, "torus length must be > 0");
    nodes_.resize(n);
    k_.resize(n);
    const double k0 = 2.0 * pi / length;
    for (int j = 0; j < n; ++j) {
      nodes_(j) = length * j / n;
      int idx = j <= n / 2 ? j : j - n;
      k_(j) = k0 * idx;
    }
    fwd_.resize(n, n);
    inv_.resize(n, n);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) {
        // exact integer phase keeps the DFT matrix symmetric to the last bit
        long long p = (static_cast<long long>(k) * j) % n;
        Complex w = std::polar(1.0, -2.0 * pi * static_cast<double>(p) / n);
        fwd_(k, j) = w / static_cast<double>(n);
        inv_(j, k) = std::conj(w);
      }
    CVec ik(n), mk2(n);
    for (int k = 0; k < n; ++k) {
      ik(k) = k == n / 2 ? Complex(0.0) : I_unit * k_(k);
      mk2(k) = -k_(k) * k_(k);
    }
    d1_ = (inv_ * ik.asDiagonal() * fwd_).real().cast<Complex>();
    d2_ = (inv_ * mk2.asDiagonal() * fwd_).real().cast<Complex>();
  }

  int size() const { return n_; }
  double length() const { return length_; }
  const RVec& nodes() const { return nodes_; }
  /// Angular wavenumber of DFT slot k; the Nyquist slot carries +n/2.
  const RVec& wavenumbers() const { return k_; }
  double wavenumber(int k) const { return k_(k); }
  bool is_nyquist(int k) const { return k == n_ / 2; }
  /// Wavenumber seen by the first-derivative matrix (zero at Nyquist).
  double first_derivative_wavenumber(int k) const { return is_nyquist(k) ? 0.0 : k_(k); }

  const CMat& forward() const { return fwd_; }
  const CMat& inverse() const { return inv_; }
  const CMat& d1() const { return d1_; }
  const CMat& d2() const { return d2_; }

  /// Trigonometric interpolant of nodal values (columns) at an arbitrary point.
  Eigen::RowVectorXcd interpolate(const CMat& values, double x) const {
    CMat hat = fwd_ * values;
    Eigen::RowVectorXcd out = Eigen::RowVectorXcd::Zero(values.cols());
    for (int k = 0; k < n_; ++k) {
      Complex phase;
      if (is_nyquist(k))
        phase = Complex(std::cos(k_(k) * x), 0.0);
      else
        phase = std::polar(1.0, k_(k) * x);
      out += phase * hat.row(k);
    }
    return out;
  }

  /// Fraction of spectral energy above 2/3 of the band, relative to the peak.
  double spectral_tail(const CMat& values) const {
    CMat hat = fwd_ * values;
    double peak = 0.0, tail = 0.0;
    for (int k = 0; k < n_; ++k) {
      double a = hat.row(k).norm();
      peak = std::max(peak, a);
      if (std::abs(k <= n_ / 2 ? k : k - n_) > n_ / 3) tail = std::max(tail, a);
    }
    return peak == 0.0 ? 0.0 : tail / peak;
  }

 private:
  int n_;
  double length_;
  RVec nodes_, k_;
  CMat fwd_, inv_, d1_, d2_;
};

/// Chebyshev-Gauss-Lobatto nodes on [0, length], y_0 = 0 and y_{n-1} = length.
class ChebyshevAxis {
 public:
  explicit ChebyshevAxis(int n, double length = 1.0) : n_(n), length_(length) {
    if (n < 3) throw Error(ErrorKind::Domain, "Chebyshev axis needs at least 3 nodes");
    if (!(length > 0.0)) throw Error(ErrorKind::Domain, "Chebyshev interval length must be > 0");
    const int N = n - 1;
    RVec xc(n);
    nodes_.resize(n);
    weights_.resize(n);
    for (int j = 0; j < n; ++j) {
      xc(j) = std::cos(pi * j / N);
      nodes_(j) = 0.5 * length * (1.0 - xc(j));
      weights_(j) = ((j % 2) ? -1.0 : 1.0) * ((j == 0 || j == N) ? 0.5 : 1.0);
    }
    nodes_(0) = 0.0;
    nodes_(N) = length;
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    auto c = [&](int j) { return (j == 0 || j == N) ? 2.0 : 1.0; };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) D(i, j) = (c(i) / c(j)) * (((i + j) % 2) ? -1.0 : 1.0) / (xc(i) - xc(j));
    // negative-sum trick for the diagonal
    for (int i = 0; i < n; ++i) D(i, i) = -D.row(i).sum();
    Eigen::MatrixXd Dy = (-2.0 / length) * D;
    d1_ = Dy.cast<Complex>();
    d2_ = (Dy * Dy).cast<Complex>();
    // Clenshaw-Curtis quadrature weights on [0, length]
    quad_ = RVec::Zero(n);
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k <= N; k += 2) {
        double b = (k == 0 || k == N) ? 1.0 : 2.0;
        s += b / (1.0 - k * k) * std::cos(pi * j * k / N);
      }
      quad_(j) = s / N * ((j == 0 || j == N) ? 1.0 : 2.0) * 0.5 * length;
    }
  }

  int size() const { return n_; }
  double length() const { return length_; }
  const RVec& nodes() const { return nodes_; }
  const CMat& d1() const { return d1_; }
  const CMat& d2() const { return d2_; }
  const RVec& quadrature() const { return quad_; }

  /// Barycentric interpolation weights at an arbitrary y (extrapolation allowed).
  RVec interpolation_row(double y) const {
    RVec row = RVec::Zero(n_);
    for (int j = 0; j < n_; ++j)
      if (y == nodes_(j)) {
        row(j) = 1.0;
        return row;
      }
    double den = 0.0;
    for (int j = 0; j < n_; ++j) {
      row(j) = weights_(j) / (y - nodes_(j));
      den += row(j);
    }
    return row / den;
  }

 private:
  int n_;
  double length_;
  RVec nodes_, weights_, quad_;
  CMat d1_, d2_;
};

/// Shared immutable axes, cached by size so repeated solves reuse the matrices.
inline std::shared_ptr<const FourierAxis> fourier_axis(int n, double length) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::shared_ptr<const FourierAxis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, length}];
  if (!slot) slot = std::make_shared<const FourierAxis>(n, length);
  return slot;
}

inline std::shared_ptr<const ChebyshevAxis> chebyshev_axis(int n, double length = 1.0) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, std::shared_ptr<const ChebyshevAxis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, length}];
  if (!slot) slot = std::make_shared<const ChebyshevAxis>(n, length);
  return slot;
}

}  // namespace stripflow

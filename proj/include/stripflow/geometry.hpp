#pragma once
/**
 * @brief Interface profiles and the flattening map between the moving domain
 *        {0 < y' < h(x')} and the fixed strip Q = torus x [0, 1].
 *
 * Forward map (x', y') -> (x', 1 - y'/h(x')), so the free boundary lands on
 * y = 0 and the bottom on y = 1. Coefficient fields use the componentwise
 * algebra in E with f_c = nu + g_c; the scalar height h drives the map.
 */
#include "holder.hpp"
#include "strip_field.hpp"

#include <functional>

namespace stripflow {

class InterfaceProfile {
 public:
  InterfaceProfile(double nu, std::shared_ptr<const FourierAxis> ax, CMat g, double h_min = -1.0)
      : nu_(nu), ax_(std::move(ax)), g_(std::move(g)) {
    if (!(nu > 0.0)) throw Error(ErrorKind::Domain, "offset nu must be > 0");
    if (g_.rows() != ax_->size() || g_.cols() < 1) throw Error(ErrorKind::Domain, "profile has the wrong shape");
    if (!all_finite(g_)) throw Error(ErrorKind::Domain, "profile values must be finite");
    h_min_ = h_min > 0.0 ? h_min : 1e-6 * nu;
    gx_ = ax_->d1() * g_;
    gxx_ = ax_->d2() * g_;
    f_ = g_.array() + Complex(nu_, 0.0);
    height_.resize(ax_->size());
    for (int i = 0; i < ax_->size(); ++i) height_(i) = height_of(g_.row(i));
    if (height_.minCoeff() < h_min_)
      throw Error(ErrorKind::Degenerate, "interface height drops below h_min");
    if (f_.cwiseAbs().minCoeff() < h_min_)
      throw Error(ErrorKind::Degenerate, "a component of nu + g drops below h_min in modulus");
  }

  static InterfaceProfile flat(double nu, std::shared_ptr<const FourierAxis> ax, int m = 1) {
    CMat g = CMat::Zero(ax->size(), m);
    return InterfaceProfile(nu, std::move(ax), std::move(g));
  }

  double nu() const { return nu_; }
  double h_min() const { return h_min_; }
  int dim() const { return static_cast<int>(g_.cols()); }
  int nx() const { return ax_->size(); }
  const FourierAxis& axis() const { return *ax_; }
  std::shared_ptr<const FourierAxis> axis_ptr() const { return ax_; }
  const CMat& g() const { return g_; }
  const CMat& gx() const { return gx_; }
  const CMat& gxx() const { return gxx_; }
  /// Componentwise nu + g.
  const CMat& f() const { return f_; }
  const RVec& height() const { return height_; }

  SampledFunction as_sampled() const { return SampledFunction::on_torus(*ax_, g_); }

  InterfaceProfile with_g(CMat g) const { return InterfaceProfile(nu_, ax_, std::move(g), h_min_); }

  /// Height at an arbitrary abscissa through the trigonometric interpolant of g.
  double height_at(double x) const {
    if (is_node(x)) return height_(node_index(x));
    return height_of(ax_->interpolate(g_, x));
  }

  double spectral_tail() const { return ax_->spectral_tail(g_); }

 private:
  template <class Row>
  double height_of(const Row& gi) const {
    double s = 0.0;
    for (Eigen::Index c = 0; c < gi.size(); ++c) s += std::norm(Complex(nu_, 0.0) + gi(c));
    return std::sqrt(s / static_cast<double>(gi.size()));
  }
  bool is_node(double x) const {
    double s = x / ax_->length() * ax_->size();
    return s == std::floor(s) && s >= 0 && s < ax_->size();
  }
  int node_index(double x) const { return static_cast<int>(x / ax_->length() * ax_->size()); }

  double nu_, h_min_;
  std::shared_ptr<const FourierAxis> ax_;
  CMat g_, gx_, gxx_, f_;
  RVec height_;
};

struct Point {
  double x = 0.0, y = 0.0;
};

inline Point map_forward(const InterfaceProfile& p, Point q) {
  double h = p.height_at(q.x);
  if (!(q.y >= 0.0 && q.y <= h)) throw Error(ErrorKind::Domain, "point lies outside the physical domain");
  return {q.x, 1.0 - q.y / h};
}

inline Point map_inverse(const InterfaceProfile& p, Point q) {
  if (!(q.y >= 0.0 && q.y <= 1.0)) throw Error(ErrorKind::Domain, "point lies outside the strip");
  return {q.x, (1.0 - q.y) * p.height_at(q.x)};
}

/// Determinant of d(x,y)/d(x',y') at a strip point: -1/h(x). Its inverse map has -h.
inline double inverse_jacobian_determinant(const InterfaceProfile& p, double x) { return -p.height_at(x); }

using PhysicalField = std::function<CVec(double, double)>;

/// v(x, y) = u(x, (1 - y) h(x)) sampled at the strip nodes.
inline StripField pushforward(const InterfaceProfile& p, const PhysicalField& u,
                              std::shared_ptr<const ChebyshevAxis> y) {
  StripField v(p.axis_ptr(), y, p.dim());
  for (int i = 0; i < p.nx(); ++i)
    for (int j = 0; j < y->size(); ++j) {
      CVec val = u(p.axis().nodes()(i), (1.0 - y->nodes()(j)) * p.height()(i));
      for (int c = 0; c < p.dim(); ++c) v(i, j, c) = val(c);
    }
  return v;
}

/// u(x', y') = v(x', 1 - y'/h(x')) through the spectral interpolant of v.
inline PhysicalField pullback(const InterfaceProfile& p, const StripField& v) {
  return [p, v](double x, double yp) -> CVec { return v.evaluate(x, 1.0 - yp / p.height_at(x)); };
}

struct TransformedCoefficients {
  std::shared_ptr<const FourierAxis> x;
  std::shared_ptr<const ChebyshevAxis> y;
  int m = 1;
  // interior fields, StripField layout; a11 = 1 and a21 = a12 implicitly
  CMat a12, a22, a2;
  Eigen::MatrixXd alpha;  // alpha(g) per node and component (real part)
  RVec beta;              // 1 - y at the y nodes
  // boundary fields on the x nodes, one column per component; b11 = 0
  CMat b10, b20, b21;

  StripField field(const CMat& d) const { return StripField(x, y, m, d); }
};

inline TransformedCoefficients coefficients(const InterfaceProfile& p, std::shared_ptr<const ChebyshevAxis> y) {
  TransformedCoefficients c;
  c.x = p.axis_ptr();
  c.y = y;
  c.m = p.dim();
  const int nx = p.nx(), ny = y->size(), m = p.dim();
  c.beta = (1.0 - y->nodes().array()).matrix();
  c.a12.resize(nx, ny * m);
  c.a22.resize(nx, ny * m);
  c.a2.resize(nx, ny * m);
  c.alpha.resize(nx, ny * m);
  c.b10.resize(nx, m);
  c.b20.resize(nx, m);
  c.b21.resize(nx, m);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < nx; ++i) {
      const Complex f = p.f()(i, k), gx = p.gx()(i, k), gxx = p.gxx()(i, k);
      c.b10(i, k) = -gx;
      c.b20(i, k) = -(1.0 + gx * gx) / f;
      c.b21(i, k) = 1.0 / f;
      for (int j = 0; j < ny; ++j) {
        const double b = c.beta(j);
        const int col = k * ny + j;
        c.a12(i, col) = b * gx / f;
        c.a22(i, col) = (1.0 + b * b * gx * gx) / (f * f);
        c.a2(i, col) = (b / f) * (2.0 * gx * gx / f - gxx);
        c.alpha(i, col) = std::real(1.0 / (1.0 + f * f + b * b * gx * gx));
      }
    }
  for (const CMat* mat : {&c.a12, &c.a22, &c.a2, &c.b10, &c.b20, &c.b21})
    if (!all_finite(*mat)) throw Error(ErrorKind::Domain, "transformed coefficients are not finite");
  return c;
}

struct EllipticityReport {
  double margin = 0.0;             // min over nodes of (least eigenvalue - alpha)
  double min_eigenvalue = 0.0;     // min over nodes of the least eigenvalue
  double min_alpha = 0.0;
  double sweep_gap = 0.0;          // min over nodes of (16-direction Rayleigh min - least eigenvalue)
  bool pass = false;
  int worst_node = 0;              // flattened (i, column) index of the margin witness
};

inline EllipticityReport ellipticity_floor(const TransformedCoefficients& c) {
  EllipticityReport r;
  r.margin = r.min_eigenvalue = r.min_alpha = r.sweep_gap = std::numeric_limits<double>::infinity();
  const Eigen::Index rows = c.a12.rows(), cols = c.a12.cols();
  for (Eigen::Index col = 0; col < cols; ++col)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double a12 = c.a12(i, col).real(), a22 = c.a22(i, col).real();
      const double mid = 0.5 * (1.0 + a22), rad = std::hypot(0.5 * (1.0 - a22), a12);
      const double lmin = mid - rad;
      double sweep = std::numeric_limits<double>::infinity();
      for (int d = 0; d < 16; ++d) {
        double t = pi * d / 16.0, s1 = std::cos(t), s2 = std::sin(t);
        sweep = std::min(sweep, s1 * s1 + 2.0 * a12 * s1 * s2 + a22 * s2 * s2);
      }
      const double gap = lmin - c.alpha(i, col);
      if (gap < r.margin) {
        r.margin = gap;
        r.worst_node = static_cast<int>(col * rows + i);
      }
      r.min_eigenvalue = std::min(r.min_eigenvalue, lmin);
      r.min_alpha = std::min(r.min_alpha, c.alpha(i, col));
      r.sweep_gap = std::min(r.sweep_gap, sweep - lmin);
    }
  r.pass = r.margin >= -1e-10 && r.min_eigenvalue > 0.0 && r.min_alpha > 0.0;
  return r;
}

}  // namespace stripflow

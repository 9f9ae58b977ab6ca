#pragma once
/**
 * @brief E-valued fields on the tensor grid (x-torus) x (Chebyshev nodes in y).
 *
 * Storage is one nx-by-(ny*m) matrix: component c occupies the column block
 * [c*ny, (c+1)*ny). Row index is the x node, column index within a block the
 * y node, so x-derivatives are left products and y-derivatives right products.
 */
#include "spectral.hpp"

namespace stripflow {

class StripField {
 public:
  StripField() = default;
  StripField(std::shared_ptr<const FourierAxis> x, std::shared_ptr<const ChebyshevAxis> y, int m)
      : x_(std::move(x)), y_(std::move(y)), m_(m) {
    if (m < 1) throw Error(ErrorKind::Domain, "field dimension must be >= 1");
    data_ = CMat::Zero(x_->size(), y_->size() * m);
  }
  StripField(std::shared_ptr<const FourierAxis> x, std::shared_ptr<const ChebyshevAxis> y, int m, CMat data)
      : StripField(std::move(x), std::move(y), m) {
    if (data.rows() != data_.rows() || data.cols() != data_.cols())
      throw Error(ErrorKind::Domain, "field data has the wrong shape");
    data_ = std::move(data);
  }

  int nx() const { return x_->size(); }
  int ny() const { return y_->size(); }
  int dim() const { return m_; }
  const FourierAxis& x_axis() const { return *x_; }
  const ChebyshevAxis& y_axis() const { return *y_; }
  std::shared_ptr<const FourierAxis> x_axis_ptr() const { return x_; }
  std::shared_ptr<const ChebyshevAxis> y_axis_ptr() const { return y_; }

  CMat& data() { return data_; }
  const CMat& data() const { return data_; }

  auto comp(int c) { return data_.middleCols(c * ny(), ny()); }
  auto comp(int c) const { return data_.middleCols(c * ny(), ny()); }

  Complex& operator()(int i, int j, int c) { return data_(i, c * ny() + j); }
  Complex operator()(int i, int j, int c) const { return data_(i, c * ny() + j); }

  /// nx-by-m matrix of values on the horizontal line y = y_j.
  CMat trace(int j) const {
    CMat t(nx(), m_);
    for (int c = 0; c < m_; ++c) t.col(c) = data_.col(c * ny() + j);
    return t;
  }
  void set_trace(int j, const CMat& t) {
    for (int c = 0; c < m_; ++c) data_.col(c * ny() + j) = t.col(c);
  }
  CMat trace0() const { return trace(0); }
  CMat trace1() const { return trace(ny() - 1); }

  StripField dx() const { return with(x_->d1() * data_); }
  StripField dxx() const { return with(x_->d2() * data_); }
  StripField dy() const { return right(y_->d1()); }
  StripField dyy() const { return right(y_->d2()); }
  StripField dxy() const { return dx().dy(); }

  CVec flatten() const { return Eigen::Map<const CVec>(data_.data(), data_.size()); }
  StripField like(const CVec& flat) const {
    return with(Eigen::Map<const CMat>(flat.data(), data_.rows(), data_.cols()));
  }
  StripField zeros_like() const { return with(CMat::Zero(data_.rows(), data_.cols())); }

  double max_abs() const { return data_.size() ? data_.cwiseAbs().maxCoeff() : 0.0; }

  StripField& operator+=(const StripField& o) { data_ += o.data_; return *this; }
  StripField& operator-=(const StripField& o) { data_ -= o.data_; return *this; }
  StripField& operator*=(Complex s) { data_ *= s; return *this; }
  friend StripField operator+(StripField a, const StripField& b) { return a += b; }
  friend StripField operator-(StripField a, const StripField& b) { return a -= b; }
  friend StripField operator*(Complex s, StripField a) { return a *= s; }

  /// Applies the m-by-m matrix A at every node.
  StripField apply_matrix(const CMat& A) const {
    StripField out = zeros_like();
    for (int c = 0; c < m_; ++c)
      for (int d = 0; d < m_; ++d)
        if (A(c, d) != Complex(0.0)) out.comp(c) += A(c, d) * comp(d);
    return out;
  }

  /// Evaluates the spectral interpolant at an arbitrary point (x periodic, y in
  /// or slightly outside the Chebyshev interval).
  CVec evaluate(double x, double y) const {
    RVec row = y_->interpolation_row(y);
    CMat line(nx(), m_);
    for (int c = 0; c < m_; ++c) line.col(c) = comp(c) * row.cast<Complex>();
    return x_->interpolate(line, x).transpose();
  }

  double x_spectral_tail() const { return x_->spectral_tail(data_); }

 private:
  StripField with(CMat d) const { return StripField(x_, y_, m_, std::move(d)); }
  StripField right(const CMat& D) const {
    CMat out(data_.rows(), data_.cols());
    for (int c = 0; c < m_; ++c) out.middleCols(c * ny(), ny()).noalias() = comp(c) * D.transpose();
    return with(std::move(out));
  }

  std::shared_ptr<const FourierAxis> x_;
  std::shared_ptr<const ChebyshevAxis> y_;
  int m_ = 1;
  CMat data_;
};

}  // namespace stripflow

#pragma once
/**
 * @brief Discrete Hoelder-scale norms of E-valued samples: [f]^gamma, C^gamma,
 *        and h^{k,alpha}(A) with values measured in D_A(alpha, inf).
 */
#include "operator_core.hpp"
#include "spectral.hpp"

#include <optional>

namespace stripflow {

/// E-valued samples on a 1-D grid; column c of `values` is component c.
struct SampledFunction {
  RVec grid;
  CMat values;
  bool periodic = false;
  double period = 0.0;
  std::optional<CMat> d1, d2;

  SampledFunction() = default;
  SampledFunction(RVec g, CMat v, bool is_periodic = false, double per = 0.0)
      : grid(std::move(g)), values(std::move(v)), periodic(is_periodic), period(per) {
    validate();
  }

  /// Samples on a Fourier axis with spectral first and second derivatives attached.
  static SampledFunction on_torus(const FourierAxis& ax, const CMat& v) {
    SampledFunction f(ax.nodes(), v, true, ax.length());
    f.d1 = ax.d1() * v;
    f.d2 = ax.d2() * v;
    return f;
  }

  int size() const { return static_cast<int>(grid.size()); }
  int dim() const { return static_cast<int>(values.cols()); }

  const CMat& derivative(int order) const {
    if (order == 0) return values;
    const auto& d = order == 1 ? d1 : d2;
    if (order > 2 || !d) throw Error(ErrorKind::Domain, "requested derivative is not attached");
    return *d;
  }

  void validate() const {
    if (grid.size() != values.rows()) throw Error(ErrorKind::Domain, "grid and values differ in length");
    if (grid.size() < 4) throw Error(ErrorKind::Domain, "a sampled function needs at least 4 nodes");
    for (Eigen::Index i = 1; i < grid.size(); ++i)
      if (!(grid(i) > grid(i - 1))) throw Error(ErrorKind::Domain, "grid must be strictly increasing");
    if (!all_finite(values)) throw Error(ErrorKind::Domain, "sampled values must be finite");
    if (periodic && !(period > grid(grid.size() - 1) - grid(0)))
      throw Error(ErrorKind::Domain, "period must exceed the grid span");
  }
};

struct HolderNormReport {
  double sup_norm = 0.0;
  double seminorm = 0.0;
  double total = 0.0;
  std::pair<double, double> witness_pair{0.0, 0.0};
};

/// Norm used for values: Euclidean on E, or the discrete D_A(theta, inf) norm.
class ValueNorm {
 public:
  ValueNorm() = default;
  explicit ValueNorm(std::shared_ptr<const InterpNorm> da) : da_(std::move(da)) {}

  static ValueNorm interpolation(const SectorialOperator& A, double theta) {
    return ValueNorm(std::make_shared<const InterpNorm>(A, InterpolationNormSpec::log_spaced(theta)));
  }

  template <class Vec>
  double operator()(const Vec& u) const {
    if (!da_) return u.norm();
    return (*da_)(u.transpose());
  }

 private:
  std::shared_ptr<const InterpNorm> da_;
};

namespace detail {

inline double grid_distance(double a, double b, bool periodic, double period) {
  double d = std::abs(a - b);
  return periodic ? std::min(d, period - d) : d;
}

/// Exhaustive pair sweep. Each worker scans a contiguous band of rows; the final
/// reduction keeps the lexicographically first maximizer so the witness does
/// not depend on the worker count.
inline HolderNormReport holder_sweep(const RVec& grid, const CMat& values, bool periodic, double period,
                                     double gamma, const ValueNorm& norm) {
  const int n = static_cast<int>(grid.size());
  if (n < 2) throw Error(ErrorKind::Domain, "Hoelder seminorm needs at least 2 nodes");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::Domain, "gamma must lie in (0, 1]");
  HolderNormReport rep;
  for (int i = 0; i < n; ++i) rep.sup_norm = std::max(rep.sup_norm, norm(values.row(i)));

  struct Best {
    double v = -1.0;
    int i = 0, j = 1;
  };
  const int workers = std::max(1, std::min(worker_count(), n));
  std::vector<Best> best(workers);
  const int chunk = (n + workers - 1) / workers;
  parallel_for(workers, [&](int lo, int hi) {
    for (int w = lo; w < hi; ++w) {
      Best b;
      for (int i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i)
        for (int j = i + 1; j < n; ++j) {
          double d = grid_distance(grid(i), grid(j), periodic, period);
          if (d <= 0.0) continue;
          double r = norm(values.row(i) - values.row(j)) / std::pow(d, gamma);
          if (r > b.v) b = {r, i, j};
        }
      best[w] = b;
    }
  });
  Best top;
  for (const auto& b : best)
    if (b.v > top.v) top = b;
  rep.seminorm = std::max(0.0, top.v);
  rep.witness_pair = {grid(top.i), grid(top.j)};
  rep.total = rep.sup_norm + rep.seminorm;
  return rep;
}

}  // namespace detail

inline HolderNormReport holder_seminorm(const SampledFunction& f, double gamma, const ValueNorm& norm = {}) {
  return detail::holder_sweep(f.grid, f.values, f.periodic, f.period, gamma, norm);
}

/// h^{k,alpha}: sum_{j<=k} sup |f^{(j)}| + [f^{(k)}]^alpha, values in `norm`.
inline double hk_alpha_norm(const SampledFunction& f, int k, double alpha, const ValueNorm& norm) {
  if (k < 0 || k > 2) throw Error(ErrorKind::Domain, "order must be 0, 1 or 2");
  double total = 0.0;
  for (int j = 0; j < k; ++j) {
    const CMat& d = f.derivative(j);
    double s = 0.0;
    for (Eigen::Index i = 0; i < d.rows(); ++i) s = std::max(s, norm(d.row(i)));
    total += s;
  }
  return total + detail::holder_sweep(f.grid, f.derivative(k), f.periodic, f.period, alpha, norm).total;
}

inline double h2alpha_norm(const SampledFunction& g, double alpha, const SectorialOperator& A) {
  if (!g.d1 || !g.d2) throw Error(ErrorKind::Domain, "h2alpha_norm needs first and second derivatives");
  return hk_alpha_norm(g, 2, alpha, ValueNorm::interpolation(A, alpha));
}

/// Norms of periodic traces on a Fourier axis, reusing one D_A weight table.
class TraceNorms {
 public:
  TraceNorms(std::shared_ptr<const FourierAxis> ax, const SectorialOperator& A, double alpha)
      : ax_(std::move(ax)), alpha_(alpha), da_(ValueNorm::interpolation(A, alpha)) {}

  double h(int k, const CMat& v) const {
    return hk_alpha_norm(SampledFunction::on_torus(*ax_, v), k, alpha_, da_);
  }
  double h1(const CMat& v) const { return h(1, v); }
  double h2(const CMat& v) const { return h(2, v); }
  double alpha() const { return alpha_; }
  const ValueNorm& value_norm() const { return da_; }

 private:
  std::shared_ptr<const FourierAxis> ax_;
  double alpha_;
  ValueNorm da_;
};

}  // namespace stripflow

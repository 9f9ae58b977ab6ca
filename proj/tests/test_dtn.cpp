/**
 * @brief Tests for the interface operator, its derivative, the frozen
 *        operators and their sector reports, admissibility and localization.
 */
#include "stripflow/dtn.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace stripflow;

namespace {

SectorialOperator coupled_op() {
  CMat A(2, 2);
  A << 2.0, 0.5, 0.25, 1.0;
  return SectorialOperator(A, pi / 2, 4.0);
}

CMat sample(const FourierAxis& ax, const std::function<Complex(double)>& f, int m = 1) {
  CMat g(ax.size(), m);
  for (int i = 0; i < ax.size(); ++i)
    for (int c = 0; c < m; ++c) g(i, c) = f(ax.nodes()(i) + 0.4 * c);
  return g;
}

InterfaceProfile bump(double amp, int nx = 64, int m = 1) {
  auto ax = fourier_axis(nx, 2 * pi);
  return InterfaceProfile(1.0, ax, sample(*ax, [amp](double x) { return amp * std::sin(x); }, m));
}

double flat_symbol(double a, double mu, double k, double nu = 1.0) {
  double s = std::sqrt(a + mu * mu + k * k);
  return s * std::tanh(nu * s);
}

}  // namespace

TEST(DtN, FlatProfileIsAnEquilibrium) {
  DtN d(InterfaceProfile::flat(1.0, fourier_axis(32, 2 * pi)), SectorialOperator::scalar(1.0), 1.0);
  EXPECT_EQ(d.value().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d.upsilon().max_abs(), 0.0);
  auto app = dtn_apply(InterfaceProfile::flat(1.0, fourier_axis(32, 2 * pi)), SectorialOperator::scalar(1.0), 1.0);
  EXPECT_EQ(app.value.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DtN, SmallSinusoidFollowsTheLinearizedSymbol) {
  const double eps = 1e-3, mu = 1.0;
  for (int k : {1, 3}) {
    auto ax = fourier_axis(64, 2 * pi);
    CMat g = sample(*ax, [&](double x) { return eps * std::sin(k * x); });
    DtN d(InterfaceProfile(1.0, ax, g), SectorialOperator::scalar(1.0), mu);
    CMat expect = flat_symbol(1.0, mu, k) * g;
    double err = (d.value() - expect).cwiseAbs().maxCoeff() / expect.cwiseAbs().maxCoeff();
    EXPECT_LT(err, 0.01 + 10 * eps) << "k = " << k;
  }
}

TEST(DtN, SmallBumpsArePositive) {
  for (double amp : {1e-3, 1e-2, 5e-2}) {
    auto ax = fourier_axis(64, 2 * pi);
    CMat g = sample(*ax, [amp](double x) { return amp * std::exp(std::cos(x) - 1.0); });
    DtN d(InterfaceProfile(1.0, ax, g), SectorialOperator::scalar(1.0), 1.0);
    EXPECT_GT((g.adjoint() * d.value())(0, 0).real(), 0.0);
  }
}

TEST(Derivative, LinearInTheDirection) {
  DtN d(bump(0.1, 64, 2), coupled_op(), 1.0);
  const auto& ax = d.profile().axis();
  CMat p1 = sample(ax, [](double x) { return std::cos(2 * x); }, 2);
  CMat p2 = sample(ax, [](double x) { return Complex(std::sin(x), 0.5 * std::cos(3 * x)); }, 2);
  Complex k(0.3, -2.0);
  CMat lhs = d.derivative(p1 + k * p2), rhs = d.derivative(p1) + k * d.derivative(p2);
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9 * lhs.cwiseAbs().maxCoeff());
}

TEST(Derivative, CentralDifferencesConvergeAtSecondOrder) {
  auto p = bump(0.1, 64);
  auto A = SectorialOperator::scalar(1.0);
  StripSolverOptions opt;
  DtN d(p, A, 1.0, opt);
  CMat psi = sample(p.axis(), [](double x) { return std::cos(x) + 0.3 * std::sin(3 * x); });
  CMat exact = d.derivative(psi);
  std::vector<double> eps{0.2, 0.1, 0.05}, err;
  for (double e : eps) {
    CMat fd = (DtN(p.with_g(p.g() + e * psi), A, 1.0, opt).value() - DtN(p.with_g(p.g() - e * psi), A, 1.0, opt).value()) /
              (2.0 * e);
    err.push_back((fd - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff());
  }
  EXPECT_NEAR(loglog_slope(eps, err), 2.0, 0.2);
}

TEST(Derivative, AtFlatProfileMatchesTheFrozenSymbol) {
  auto p = InterfaceProfile::flat(1.0, fourier_axis(64, 2 * pi));
  DtN d(p, SectorialOperator::scalar(1.0), 1.0);
  FrozenOperatorSet fs = frozen_set(d, 0);
  for (int k : {1, 2, 5}) {
    CMat e = sample(p.axis(), [k](double x) { return std::polar(1.0, k * x); });
    CMat got = d.derivative(e);
    CMat want = fs.o10[k](0, 0) * e;
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-6) << "k = " << k;
    EXPECT_NEAR(std::abs(fs.o10[k](0, 0) - flat_symbol(1.0, 1.0, k)), 0.0, 1e-10);
  }
}

TEST(Derivative, FlatScalarLinearizationIsDiagonalInFourier) {
  auto p = InterfaceProfile::flat(1.0, fourier_axis(32, 2 * pi));
  DtN d(p, SectorialOperator::scalar(1.0), 1.0);
  const auto& ax = p.axis();
  for (int k : {0, 1, 4, 9}) {
    CMat e = sample(ax, [k](double x) { return std::polar(1.0, k * x); });
    CMat hat = ax.forward() * d.derivative(e);
    double diag = std::abs(hat(k, 0)), off = 0.0;
    for (int q = 0; q < 32; ++q)
      if (q != k) off = std::max(off, std::abs(hat(q, 0)));
    EXPECT_LT(off, 1e-8 * diag) << "k = " << k;
  }
}

TEST(FrozenSet, FlatProfileHasOnlyThePrincipalPart) {
  auto p = InterfaceProfile::flat(1.0, fourier_axis(32, 2 * pi));
  auto fs = frozen_set(p, SectorialOperator::scalar(1.0), 5, 0.0);
  for (int k = 0; k < 32; ++k) {
    EXPECT_EQ(fs.o20[k].norm(), 0.0);
    EXPECT_EQ(fs.o30[k].norm(), 0.0);
  }
  EXPECT_NEAR(fs.o10[1](0, 0).real(), std::sqrt(2.0) * std::tanh(std::sqrt(2.0)), 1e-12);
  EXPECT_THROW(frozen_set(p, SectorialOperator::scalar(1.0), 32, 0.0), Error);
  EXPECT_THROW(frozen_set(p, SectorialOperator::scalar(1.0), -1, 0.0), Error);
}

TEST(FrozenSet, SumIdentityAndLinearity) {
  DtN d(bump(0.1, 64, 2), coupled_op(), 1.0);
  for (int node : {0, 16, 40}) {
    auto fs = frozen_set(d, node);
    for (int k = 0; k < 64; ++k) {
      EXPECT_LT((fs.o0[k] - (fs.o10[k] + fs.o20[k] + fs.o30[k])).norm(), 1e-12 * (1 + fs.o0[k].norm()));
      EXPECT_LT((fs.o30[k] - (fs.o30_parts[0][k] + fs.o30_parts[1][k] + fs.o30_parts[2][k])).norm(),
                1e-12 * (1 + fs.o30[k].norm()));
    }
    CMat u = sample(d.profile().axis(), [](double x) { return std::sin(2 * x); }, 2);
    CMat v = sample(d.profile().axis(), [](double x) { return std::cos(x); }, 2);
    for (FrozenPart part : {FrozenPart::O10, FrozenPart::O20, FrozenPart::O30, FrozenPart::O0}) {
      CMat lhs = fs.apply(part, u + 2.0 * v), rhs = fs.apply(part, u) + 2.0 * fs.apply(part, v);
      EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * (1 + lhs.cwiseAbs().maxCoeff()));
    }
    CMat sum = fs.apply(FrozenPart::O10, u) + fs.apply(FrozenPart::O20, u) + fs.apply(FrozenPart::O30, u);
    EXPECT_LT((fs.apply(FrozenPart::O0, u) - sum).cwiseAbs().maxCoeff(), 1e-12 * (1 + sum.cwiseAbs().maxCoeff()));
  }
}

TEST(SectorReport, FlatScalarPasses) {
  auto A = SectorialOperator::scalar(1.0);
  auto fs = frozen_set(InterfaceProfile::flat(1.0, fourier_axis(64, 2 * pi)), A, 0, 1.0);
  auto r = sector_report(fs, A);
  EXPECT_TRUE(r.generates_analytic_semigroup);
  for (const auto& p : r.parts) EXPECT_TRUE(p.pass) << p.name;
  EXPECT_TRUE(r.resolvent_ok);
  EXPECT_GT(r.c1, 0.0);
  EXPECT_LT(r.ratio, 1e3);
}

TEST(SectorReport, SignFlippedBoundaryCoefficientFails) {
  auto A = SectorialOperator::scalar(1.0);
  auto fs = frozen_set(InterfaceProfile::flat(1.0, fourier_axis(64, 2 * pi)), A, 0, 1.0);
  // flipping b20 flips the principal symbol B2 Dk
  for (int k = 0; k < 64; ++k) {
    fs.o10[k] = -fs.o10[k];
    fs.o0[k] = fs.o10[k] + fs.o20[k] + fs.o30[k];
  }
  auto r = sector_report(fs, A);
  EXPECT_FALSE(r.generates_analytic_semigroup);
  EXPECT_FALSE(r.parts[0].pass);
}

TEST(Admissibility, FlatProfileHasMarginOneHalf) {
  auto r = admissibility(InterfaceProfile::flat(1.0, fourier_axis(32, 2 * pi)), SectorialOperator::scalar(1.0), 1.0);
  EXPECT_TRUE(r.in_W1);
  EXPECT_NEAR(r.margin, 0.5, 1e-12);
  EXPECT_NEAR(r.w_min, 0.0, 1e-14);
  EXPECT_NEAR(r.k_min, 0.5, 1e-12);
}

TEST(Admissibility, MarginIsContinuousAndExitIsBracketed) {
  auto A = SectorialOperator::scalar(1.0);
  auto margin = [&](double amp) { return admissibility(bump(amp, 32), A, 1.0).margin; };
  double prev = margin(0.0);
  for (int s = 1; s <= 8; ++s) {
    double m = margin(0.05 * s);
    EXPECT_LT(std::abs(m - prev), 0.15);
    prev = m;
  }
  // bisection on the amplitude for the first exit from W1
  double lo = 0.0, hi = 0.9;
  ASSERT_GT(margin(lo), 0.0);
  if (margin(hi) < 0.0) {
    for (int it = 0; it < 20; ++it) {
      double mid = 0.5 * (lo + hi);
      (margin(mid) > 0.0 ? lo : hi) = mid;
    }
    EXPECT_GT(margin(lo), 0.0);
    EXPECT_LE(margin(hi), 0.0);
    EXPECT_LT(hi - lo, 1e-5);
  }
}

TEST(Localization, PartitionOfUnity) {
  auto ax = fourier_axis(64, 2 * pi);
  for (double delta : {1.0, 0.5, 0.25, 0.3}) {
    std::vector<double> centers;
    auto phis = partition_of_unity(*ax, delta, &centers);
    EXPECT_EQ(static_cast<int>(phis.size()), static_cast<int>(std::ceil(1.0 / delta - 1e-12)));
    EXPECT_EQ(centers.size(), phis.size());
    RVec sum = RVec::Zero(64);
    for (const auto& p : phis) {
      sum += p;
      EXPECT_GE(p.minCoeff(), 0.0);
    }
    EXPECT_LT((sum.array() - 1.0).abs().maxCoeff(), 1e-14);
  }
  EXPECT_THROW(partition_of_unity(*ax, 0.0), Error);
  EXPECT_THROW(partition_of_unity(*ax, 1.5), Error);
}

TEST(Localization, FlatProfileHasNoResidual) {
  auto A = SectorialOperator::scalar(1.0);
  DtN d(InterfaceProfile::flat(1.0, fourier_axis(64, 2 * pi)), A, 1.0);
  CMat dir = sample(d.profile().axis(), [](double x) { return std::cos(x) + 0.3 * std::sin(3 * x); });
  for (double delta : {1.0, 0.5, 0.25}) {
    auto r = localization_residual(d, A, delta, dir, 1.0);
    EXPECT_LT(r.max_relative, 1e-8);
  }
}

TEST(Localization, TimeZeroUsesOnlyThePrincipalComparison) {
  auto A = SectorialOperator::scalar(1.0);
  DtN d(bump(0.1, 64), A, 1.0);
  const auto& ax = d.profile().axis();
  CMat dir = sample(ax, [](double x) { return std::cos(x); });
  auto r = localization_residual(d, A, 0.5, dir, 0.0);
  TraceNorms tn(d.profile().axis_ptr(), A, 0.5);
  auto phis = partition_of_unity(ax, 0.5);
  for (std::size_t j = 0; j < phis.size(); ++j) {
    CMat u = phis[j].cast<Complex>().asDiagonal() * dir;
    int node = static_cast<int>(std::lround(r.centers[j] / ax.length() * ax.size())) % ax.size();
    double want = tn.h1(d.derivative_parts(u).kpsi - frozen_set(d, node).apply(FrozenPart::O10, u));
    EXPECT_NEAR(r.residuals[j], want, 1e-12 * (1 + want));
  }
  EXPECT_THROW(localization_residual(d, A, 0.5, dir, 1.5), Error);
  EXPECT_THROW(localization_residual(d, A, 0.5, dir, -0.1), Error);
}

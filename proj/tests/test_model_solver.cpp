/**
 * @brief Tests for the frozen-coefficient half-plane solver: decay generators,
 *        multiplier solutions, multiplier profiles and the inhomogeneous splitting.
 */
#include "stripflow/model_solver.hpp"
#include "stripflow/strip_solver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace stripflow;

namespace {

CMat coupled() {
  CMat A(2, 2);
  A << 2.0, 0.5, 0.25, 1.0;
  return A;
}

FrozenCoefficients scalar_fc(double a12 = 0.0, double a22 = 1.0, double mu = 0.0) {
  return FrozenCoefficients(a12, a22, SectorialOperator::scalar(1.0), mu);
}

FrozenCoefficients coupled_fc(double mu = 1.0) {
  RVec a12(2), a22(2);
  a12 << 0.2, -0.1;
  a22 << 1.3, 0.8;
  return FrozenCoefficients(a12, a22, SectorialOperator(coupled(), pi / 2, 4.0), mu);
}

int slot_of(int k, int nx) { return k >= 0 ? k : nx + k; }

/// Fourier coefficient of mode slot `s`, component c, interpolated to height y.
Complex mode_value(const StripField& u, int s, int c, double y) {
  CMat hat = u.x_axis().forward() * u.data();
  RVec row = u.y_axis().interpolation_row(y);
  Complex v = 0.0;
  for (int j = 0; j < u.ny(); ++j) v += row(j) * hat(s, c * u.ny() + j);
  return v;
}

}  // namespace

TEST(FrozenCoefficients, InvariantsAreEnforced) {
  auto A = SectorialOperator::scalar(1.0);
  EXPECT_THROW(FrozenCoefficients(0.0, 0.0, A), Error);
  EXPECT_THROW(FrozenCoefficients(1.0, 1.0, A), Error);
  EXPECT_THROW(FrozenCoefficients(0.0, 1.0, A, -1.0), Error);
  EXPECT_THROW(FrozenCoefficients(RVec::Zero(2), RVec::Ones(2), A), Error);
  EXPECT_THROW(scalar_fc().with_mu(-0.5), Error);
  EXPECT_NO_THROW(FrozenCoefficients(0.9, 1.0, A));
}

TEST(DecayGenerator, ScalarUnitExample) {
  auto d = decay_generator(scalar_fc(), 0.0);
  EXPECT_NEAR(std::abs(d.Lambda(0, 0) - 1.0), 0.0, 1e-15);
}

TEST(DecayGenerator, QuadraticResidualAndRightHalfPlaneSweep) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ud(-0.5, 0.5);
  for (int t = 0; t < 4; ++t) {
    RVec a12(2), a22(2);
    a12 << ud(rng), ud(rng);
    a22 << 1.0 + ud(rng), 1.2 + ud(rng);
    for (double mu : {0.0, 1.0, 4.0}) {
      FrozenCoefficients fc(a12, a22, SectorialOperator(coupled(), pi / 2, 4.0), mu);
      for (int i = -64; i <= 64; i += 3) {
        auto d = decay_generator(fc, i);
        EXPECT_LT(quadratic_residual(fc, d), 1e-10);
        EXPECT_GT(Eigen::ComplexEigenSolver<CMat>(d.Lambda).eigenvalues().real().minCoeff(), 0.0);
      }
    }
  }
}

TEST(DecayGenerator, UniformAndCompanionPathsAgree) {
  // equal per-component coefficients take the square-root path; a tiny
  // perturbation forces the companion path
  RVec a12 = RVec::Constant(2, 0.3), a22 = RVec::Constant(2, 1.1);
  FrozenCoefficients u(a12, a22, SectorialOperator(coupled(), pi / 2, 4.0), 1.0);
  RVec b12 = a12;
  b12(1) += 1e-13;
  FrozenCoefficients c(b12, a22, SectorialOperator(coupled(), pi / 2, 4.0), 1.0);
  ASSERT_TRUE(u.uniform());
  ASSERT_FALSE(c.uniform());
  for (double eta : {-7.0, 0.0, 2.5}) EXPECT_LT((decay_generator(u, eta).Lambda - decay_generator(c, eta).Lambda).norm(), 1e-9);
}

TEST(DecayGenerator, BranchCutIsAnEllipticityError) {
  FrozenCoefficients fc(0.0, 1.0, SectorialOperator::scalar(-2.0), 0.0);
  try {
    decay_generator(fc, 0.0);
    FAIL() << "expected an ellipticity error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Ellipticity);
  }
}

TEST(Multiplier, SemigroupPropertyInY) {
  auto fc = coupled_fc();
  for (double eta : {-3.0, 0.0, 5.0}) {
    auto d = decay_generator(fc, eta);
    for (auto [a, b] : {std::pair{0.1, 0.3}, std::pair{0.7, 1.2}})
      EXPECT_LT((multiplier(d, a + b) - multiplier(d, a) * multiplier(d, b)).norm(), 1e-12);
  }
}

TEST(DirichletSolve, ZeroAndConstantData) {
  auto ax = fourier_axis(32, 2 * pi);
  auto y = chebyshev_axis(33, 5.0);
  auto z = halfplane_dirichlet_solve(scalar_fc(), ax, CMat::Zero(32, 1), y);
  EXPECT_EQ(z.u.max_abs(), 0.0);
  auto c = halfplane_dirichlet_solve(scalar_fc(), ax, CMat::Constant(32, 1, 1.5), y);
  for (int i = 0; i < 32; i += 5)
    for (int j = 0; j < 33; ++j) EXPECT_NEAR(std::abs(c.u(i, j, 0) - 1.5 * std::exp(-y->nodes()(j))), 0.0, 1e-13);
  EXPECT_FALSE(c.unresolved);
}

TEST(DirichletSolve, ShapeMismatchIsAnError) {
  auto ax = fourier_axis(32, 2 * pi);
  EXPECT_THROW(halfplane_dirichlet_solve(scalar_fc(), ax, CMat::Zero(16, 1), chebyshev_axis(9)), Error);
}

TEST(DirichletSolve, UnresolvedDataIsFlagged) {
  auto ax = fourier_axis(32, 2 * pi);
  CMat psi = CMat::Zero(32, 1);
  psi(3, 0) = 1.0;
  EXPECT_TRUE(halfplane_dirichlet_solve(scalar_fc(), ax, psi, chebyshev_axis(9)).unresolved);
}

TEST(DirichletSolve, TraceAndInteriorResidual) {
  auto fc = coupled_fc(1.0);
  auto ax = fourier_axis(64, 2 * pi);
  auto y = chebyshev_axis(33, default_depth(fc));
  CMat psi(64, 2);
  for (int i = 0; i < 64; ++i) {
    double x = ax->nodes()(i);
    psi(i, 0) = std::sin(x) + 0.3 * std::cos(3 * x);
    psi(i, 1) = Complex(0.5 * std::cos(2 * x), 0.2 * std::sin(x));
  }
  auto s = halfplane_dirichlet_solve(fc, ax, psi, y);
  EXPECT_LT((s.u.trace0() - psi).cwiseAbs().maxCoeff(), 1e-13);
  // -u_xx - 2 a12 u_xy - a22 u_yy + (A + mu^2) u = 0
  StripField r = s.u.apply_matrix(fc.A.matrix());
  r.data() += fc.mu * fc.mu * s.u.data() - s.u.dxx().data();
  StripField uxy = s.uy.dx();
  for (int c = 0; c < 2; ++c) {
    r.comp(c) -= 2.0 * fc.a12(c) * uxy.comp(c) + fc.a22(c) * s.uyy.comp(c);
  }
  EXPECT_LT(r.max_abs(), 1e-8 * psi.cwiseAbs().maxCoeff());
}

TEST(DirichletSolve, LinearInTheDatum) {
  auto fc = coupled_fc(2.0);
  auto ax = fourier_axis(32, 2 * pi);
  auto y = chebyshev_axis(17, default_depth(fc));
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  CMat p1(32, 2), p2(32, 2);
  for (int i = 0; i < 32; ++i)
    for (int c = 0; c < 2; ++c) {
      double x = ax->nodes()(i);
      p1(i, c) = nd(rng) * std::sin(x + c) + nd(rng) * std::cos(2 * x);
      p2(i, c) = nd(rng) * std::cos(x) + nd(rng) * std::sin(3 * x - c);
    }
  Complex k(0.7, -1.3);
  auto a = halfplane_dirichlet_solve(fc, ax, p1, y).u, b = halfplane_dirichlet_solve(fc, ax, p2, y).u;
  auto s = halfplane_dirichlet_solve(fc, ax, CMat(p1 + k * p2), y).u;
  EXPECT_LT((s - (a + k * b)).max_abs(), 1e-12 * s.max_abs());
}

TEST(DirichletSolve, MatchesDenseOdeOracleOnSingleModes) {
  auto fc = coupled_fc(1.0);
  const int nx = 64;
  auto ax = fourier_axis(nx, 2 * pi);
  const double Y = default_depth(fc);
  auto y = chebyshev_axis(97, Y);
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> kd(-8, 8);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 4; ++t) {
    const int k = kd(rng);
    CVec c(2);
    c << Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng));
    CMat psi(nx, 2);
    for (int i = 0; i < nx; ++i) psi.row(i) = std::polar(1.0, k * ax->nodes()(i)) * c.transpose();
    auto s = halfplane_dirichlet_solve(fc, ax, psi, y);
    auto ref = oracle::mode_bvp(fc.a12, fc.a22, fc.A.matrix(), fc.mu, k, 2 * Y, c, CVec::Zero(2),
                                [](double) { return CVec::Zero(2); });
    double err = 0.0, scale = 0.0;
    for (int i = 0; i < ref.y.size() && ref.y(i) <= Y; ++i)
      for (int comp = 0; comp < 2; ++comp) {
        err = std::max(err, std::abs(mode_value(s.u, slot_of(k, nx), comp, ref.y(i)) - ref.u(i, comp)));
        scale = std::max(scale, std::abs(ref.u(i, comp)));
      }
    EXPECT_LT(err / scale, 1e-4) << "mode " << k;
  }
}

TEST(MultiplierProfiles, FiniteDecayingWithPositiveRate) {
  for (const auto& fc : {scalar_fc(0.2, 1.1, 1.0), coupled_fc(1.0)}) {
    std::vector<double> ys;
    for (int i = 0; i <= 40; ++i) ys.push_back(0.1 * std::pow(100.0, i / 40.0));
    auto pr = multiplier_profiles(fc, ys);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      EXPECT_TRUE(std::isfinite(pr.phi0[i]));
      for (int j = 0; j < 3; ++j) EXPECT_TRUE(std::isfinite(pr.phi[j][i]));
    }
    EXPECT_LT(pr.phi0.back(), 1e-3 * pr.phi0.front());
    EXPECT_GT(pr.omega, 0.0);
    for (std::size_t i = ys.size() / 2 + 1; i < ys.size(); ++i) {
      EXPECT_LE(pr.phi0[i], pr.phi0[i - 1]);
      for (int j = 0; j < 3; ++j) EXPECT_LE(pr.phi[j][i], pr.phi[j][i - 1]);
    }
  }
}

TEST(MultiplierProfiles, RejectsNonPositiveAbscissae) {
  EXPECT_THROW(multiplier_profiles(scalar_fc(), {0.0, 1.0}), Error);
}

TEST(InhomogeneousSolve, BelowThresholdIsAnError) {
  FrozenCoefficients fc(0.0, 1.0, SectorialOperator::scalar(1.0), 0.5, 1.0);
  auto ax = fourier_axis(16, 2 * pi);
  StripField V(ax, chebyshev_axis(9, 4.0), 1);
  try {
    halfplane_inhomogeneous_solve(fc, V, CMat::Zero(16, 1));
    FAIL() << "expected a solver error";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.mu(), 0.5);
  }
}

TEST(InhomogeneousSolve, ZeroSourceReducesToDirichletSolve) {
  auto fc = coupled_fc(1.0);
  auto ax = fourier_axis(32, 2 * pi);
  auto y = chebyshev_axis(33, default_depth(fc));
  CMat psi(32, 2);
  for (int i = 0; i < 32; ++i) psi.row(i) << std::sin(ax->nodes()(i)), std::cos(2 * ax->nodes()(i));
  StripField V(ax, y, 2);
  auto a = halfplane_inhomogeneous_solve(fc, V, psi);
  auto b = halfplane_dirichlet_solve(fc, ax, psi, y).u;
  EXPECT_LT((a - b).max_abs(), 1e-13);
}

TEST(InhomogeneousSolve, SingleModeSourceMatchesDenseOdeOracle) {
  for (auto fc : {scalar_fc(0.3, 1.2, 1.0), coupled_fc(1.0)}) {
    const int m = fc.dim(), nx = 16, k = 2;
    const double Y = 12.0;
    auto ax = fourier_axis(nx, 2 * pi);
    auto y = chebyshev_axis(65, Y);
    CVec c = CVec::Ones(m);
    if (m == 2) c(1) = Complex(0.5, -0.25);
    auto src = [&](double yy) { return CVec(std::exp(-yy * yy) * c); };
    StripField V(ax, y, m);
    for (int i = 0; i < nx; ++i)
      for (int j = 0; j < 65; ++j)
        for (int comp = 0; comp < m; ++comp)
          V(i, j, comp) = std::polar(1.0, k * ax->nodes()(i)) * src(y->nodes()(j))(comp);
    CMat psi = CMat::Zero(nx, m);
    StripField u = halfplane_inhomogeneous_solve(fc, V, psi);
    EXPECT_LT(u.trace0().cwiseAbs().maxCoeff(), 1e-14);
    auto ref = oracle::mode_bvp(fc.a12, fc.a22, fc.A.matrix(), fc.mu, k, Y, CVec::Zero(m), CVec::Zero(m), src);
    double err = 0.0, scale = 0.0;
    for (int i = 0; i < ref.y.size(); ++i)
      for (int comp = 0; comp < m; ++comp) {
        err = std::max(err, std::abs(mode_value(u, k, comp, ref.y(i)) - ref.u(i, comp)));
        scale = std::max(scale, std::abs(ref.u(i, comp)));
      }
    EXPECT_LT(err / scale, 1e-4) << "m = " << m;
  }
}

TEST(CoercivityProbe59, ExcludesZeroDataAndReportsRows) {
  auto fc = scalar_fc(0.1, 1.1, 1.0);
  auto ax = fourier_axis(32, 2 * pi);
  EXPECT_THROW(coercivity_probe_59(fc, ax, {CMat::Zero(32, 1)}, {1.0}), Error);
  EXPECT_THROW(coercivity_probe_59(fc, ax, {}, {1.0}), Error);
  CMat psi(32, 1);
  for (int i = 0; i < 32; ++i) psi(i, 0) = std::sin(ax->nodes()(i));
  auto rep = coercivity_probe_59(fc, ax, {psi}, {1.0, 2.0});
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& r : rep.rows) EXPECT_TRUE(std::isfinite(r.ratio) && r.ratio > 0.0);
  EXPECT_GE(rep.mu_spread, 1.0);
}

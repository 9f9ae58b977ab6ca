/**
 * @brief Tests for the implicit step, the evolution loop, breakdown
 *        detection and the physical reconstruction.
 */
#include "stripflow/evolution.hpp"

#include <gtest/gtest.h>

using namespace stripflow;

namespace {

InterfaceProfile mode_profile(double amp, int k, int nx = 32) {
  auto ax = fourier_axis(nx, 2 * pi);
  CMat g(nx, 1);
  for (int i = 0; i < nx; ++i) g(i, 0) = amp * std::cos(k * ax->nodes()(i));
  return InterfaceProfile(1.0, ax, g);
}

double flat_symbol(double a, double mu, double k) {
  double s = std::sqrt(a + mu * mu + k * k);
  return s * std::tanh(s);
}

EvolutionConfig quick(double dt, double t_end) {
  EvolutionConfig c;
  c.dt = dt;
  c.t_end = t_end;
  return c;
}

}  // namespace

TEST(Step, FlatProfileStaysFlat) {
  auto p = InterfaceProfile::flat(1.0, fourier_axis(32, 2 * pi));
  auto r = step(p, SectorialOperator::scalar(1.0), 0.1, 1.0);
  EXPECT_EQ(r.next.g().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Step, SmallModeIsDampedByTheImplicitFactor) {
  const double amp = 1e-4, dt = 0.1, mu = 1.0;
  for (int k : {1, 2, 4}) {
    auto p = mode_profile(amp, k);
    auto r = step(p, SectorialOperator::scalar(1.0), dt, mu);
    double want = 1.0 / (1.0 + dt * flat_symbol(1.0, mu, k));
    double got = r.next.g().real().maxCoeff() / amp;
    EXPECT_NEAR(got, want, 1e-4) << "k = " << k;
  }
}

TEST(Step, RampForcingShiftsTheFactor) {
  const double amp = 1e-4, dt = 0.1, rate = 0.5;
  EvolutionConfig cfg = quick(dt, 1.0);
  cfg.ramp_rate = rate;
  auto r = step(mode_profile(amp, 1), SectorialOperator::scalar(1.0), dt, 1.0, cfg);
  double s = flat_symbol(1.0, 1.0, 1) - rate;
  EXPECT_NEAR(r.next.g().real().maxCoeff() / amp, 1.0 / (1.0 + dt * s), 1e-4);
}

TEST(Evolve, SmallPerturbationDecaysMonotonically) {
  auto tr = evolve(mode_profile(0.05, 1), SectorialOperator::scalar(1.0), quick(0.1, 1.0));
  ASSERT_EQ(tr.status, RunStatus::Completed);
  ASSERT_EQ(tr.times.size(), 11u);
  for (std::size_t i = 1; i < tr.times.size(); ++i) {
    EXPECT_GT(tr.times[i], tr.times[i - 1]);
    EXPECT_LT(tr.profiles[i].g().cwiseAbs().maxCoeff(), tr.profiles[i - 1].g().cwiseAbs().maxCoeff());
    EXPECT_EQ(tr.diagnostics[i].flag, Breakdown::Ok);
  }
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
}

TEST(Evolve, FlatEquilibriumIsStationary) {
  auto p = InterfaceProfile::flat(1.0, fourier_axis(32, 2 * pi));
  auto tr = evolve(p, SectorialOperator::scalar(1.0), quick(0.1, 2.0));
  EXPECT_EQ(tr.status, RunStatus::Completed);
  for (const auto& q : tr.profiles) EXPECT_EQ(q.g().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Evolve, OutputStrideKeepsTheFinalState) {
  EvolutionConfig cfg = quick(0.1, 0.5);
  cfg.output_stride = 2;
  auto tr = evolve(mode_profile(0.05, 1), SectorialOperator::scalar(1.0), cfg);
  std::vector<double> want{0.0, 0.2, 0.4, 0.5};
  ASSERT_EQ(tr.times.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(tr.times[i], want[i], 1e-12);
}

TEST(Evolve, SemiflowComposes) {
  auto A = SectorialOperator::scalar(1.0);
  auto full = evolve(mode_profile(0.05, 2), A, quick(0.1, 0.6));
  auto half = evolve(mode_profile(0.05, 2), A, quick(0.1, 0.3));
  auto rest = evolve(half.profiles.back(), A, quick(0.1, 0.3));
  EXPECT_LT((full.profiles.back().g() - rest.profiles.back().g()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Evolve, RejectsAnInadmissibleStart) {
  auto ax = fourier_axis(32, 2 * pi);
  CMat g = CMat::Constant(32, 1, Complex(-1.5, 0.0));
  InterfaceProfile p(1.0, ax, g);
  try {
    evolve(p, SectorialOperator::scalar(1.0), quick(0.1, 1.0));
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Validation);
  }
}

TEST(Evolve, RampReachesTheBoundary) {
  EvolutionConfig cfg = quick(0.05, 4.0);
  cfg.ramp_rate = 3.0;
  cfg.boundary_margin_floor = 0.1;
  auto tr = evolve(mode_profile(0.05, 1), SectorialOperator::scalar(1.0), cfg);
  EXPECT_EQ(tr.status, RunStatus::BoundaryApproach) << tr.message;
  int flagged = 0;
  for (const auto& d : tr.diagnostics) flagged += d.flag != Breakdown::Ok;
  EXPECT_EQ(flagged, 1);
  EXPECT_EQ(tr.diagnostics.back().flag, Breakdown::BoundaryApproach);
}

TEST(Breakdown, Alternatives) {
  EvolutionConfig cfg;
  EXPECT_THROW(detect_breakdown(cfg, {1.0, 1.0}), Error);
  cfg = resolve_thresholds(cfg, 2.0, 0.5);
  EXPECT_DOUBLE_EQ(*cfg.breakdown_norm_cap, 2001.0);
  EXPECT_DOUBLE_EQ(*cfg.boundary_margin_floor, 5e-4);
  EXPECT_EQ(detect_breakdown(cfg, {2.0, 0.5}), Breakdown::Ok);
  EXPECT_EQ(detect_breakdown(cfg, {1e4, 0.5}), Breakdown::NormBlowup);
  EXPECT_EQ(detect_breakdown(cfg, {2.0, 1e-4}), Breakdown::BoundaryApproach);
  EXPECT_EQ(detect_breakdown(cfg, {1e4, 1e-4}), Breakdown::NormBlowup);
  EXPECT_EQ(detect_breakdown(cfg, {std::nan(""), 0.5}), Breakdown::NormBlowup);
  EXPECT_EQ(detect_breakdown(cfg, {2.0, std::nan("")}), Breakdown::BoundaryApproach);
}

TEST(Config, ValidationMessages) {
  auto bad = [](auto mutate, const std::string& key) {
    EvolutionConfig c;
    mutate(c);
    try {
      c.validate();
      ADD_FAILURE() << "accepted bad " << key;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Validation);
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  bad([](EvolutionConfig& c) { c.dt = 0.0; }, "time.dt");
  bad([](EvolutionConfig& c) { c.t_end = -1.0; }, "time.t_end");
  bad([](EvolutionConfig& c) { c.dt = 2.0; }, "time.dt");
  bad([](EvolutionConfig& c) { c.mu_solve = -1.0; }, "solve.mu");
  bad([](EvolutionConfig& c) { c.breakdown_norm_cap = 0.0; }, "time.norm_cap");
  bad([](EvolutionConfig& c) { c.boundary_margin_floor = -1.0; }, "time.margin_floor");
  bad([](EvolutionConfig& c) { c.output_stride = 0; }, "output.stride");
  bad([](EvolutionConfig& c) { c.alpha = 1.0; }, "geometry.alpha");
  bad([](EvolutionConfig& c) { c.ramp_rate = -0.1; }, "time.ramp_rate");
  EXPECT_NO_THROW(EvolutionConfig{}.validate());
}

TEST(Reconstruct, KineticConditionHolds) {
  auto p = mode_profile(0.1, 1, 64);
  auto r = reconstruct(p, SectorialOperator::scalar(1.0), 1.0);
  EXPECT_TRUE(r.inside);
  EXPECT_LT(r.relative, 1e-6);
  EXPECT_EQ(r.u.rows(), 64);
}

TEST(Reconstruct, FlatProfileGivesZeroField) {
  auto p = InterfaceProfile::flat(1.0, fourier_axis(32, 2 * pi));
  auto r = reconstruct(p, SectorialOperator::scalar(1.0), 1.0);
  EXPECT_EQ(r.u.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.kinetic_max, 0.0);
  EXPECT_EQ(r.relative, 0.0);
  EXPECT_TRUE(r.inside);
}

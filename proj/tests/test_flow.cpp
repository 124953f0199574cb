#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "sigmaflow/error.hpp"
#include "sigmaflow/flow.hpp"

using namespace sigmaflow;

namespace {

const BackgroundGeometry kHalfBall(3, Curvature::Flat, Ball{0.5});
const BackgroundGeometry kFlatBall(3, Curvature::Flat, Ball{1.0});
const BackgroundGeometry kHypBall(3, Curvature::Hyperbolic, Ball{1.0});
const BackgroundGeometry kHypAnnulus(3, Curvature::Hyperbolic, Annulus{0.5, 1.0});

const PoincareBall kPoincare{1.0};

double sup_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// u* restricted to the ball of radius 0.5 with its own (constant) boundary value.
struct Steady {
  RadialGrid grid;
  BoundarySchedule sched;
  std::vector<double> u;
};

Steady steady_half_ball(int N, int k) {
  Steady s{make_grid(kHalfBall, N), {}, {}};
  s.u = sample(kPoincare.profile(), s.grid);
  s.sched = build_schedule(DirichletTarget{kPoincare.value(0.5)}, kPoincare.profile(), s.grid, kHalfBall, k);
  return s;
}

RunConfig quick(int k, int N, double t_max) {
  RunConfig cfg;
  cfg.k = k;
  cfg.N = N;
  cfg.t_max = t_max;
  cfg.run_to_horizon = true;
  return cfg;
}

double interior_sup(const RadialGrid& grid, std::span<const double> v) {
  double m = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    if (!grid.is_boundary(i)) m = std::max(m, std::abs(v[static_cast<std::size_t>(i)]));
  }
  return m;
}

}  // namespace

TEST(Scheme, Names) {
  for (auto s : {Scheme::ExplicitRK2, Scheme::SemiImplicit}) EXPECT_EQ(scheme_from_string(to_string(s)), s);
  EXPECT_THROW(scheme_from_string("midpoint"), InvalidInput);
}

TEST(RunConfig, Validation) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.N = 15;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.dt_safety = 1.5;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.dt_safety = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  cfg = {};
  cfg.t_max = -1.0;
  EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(Rhs, ExactSolutionIsSecondOrderSmall) {
  for (int k = 1; k <= 3; ++k) {
    double prev = 0.0;
    for (int N : {32, 64, 128}) {
      auto s = steady_half_ball(N, k);
      std::vector<double> out(s.u.size());
      ASSERT_EQ(rhs(kHalfBall, k, s.grid, s.u, s.sched, 0.0, out), -1);
      const double e = interior_sup(s.grid, out);
      EXPECT_LT(e, 5.0 * s.grid.h * s.grid.h);
      if (prev > 0.0) EXPECT_NEAR(prev / e, 4.0, 0.8) << "k=" << k << " N=" << N;
      prev = e;
      EXPECT_EQ(out.back(), 0.0);
    }
  }
}

TEST(Rhs, ConstantShiftAddsTheShift) {
  const double c = 0.7;
  for (int k = 1; k <= 3; ++k) {
    auto s = steady_half_ball(64, k);
    std::vector<double> base(s.u.size()), out(s.u.size()), lowered(s.u);
    rhs(kHalfBall, k, s.grid, s.u, s.sched, 0.0, base);
    for (double& x : lowered) x -= c;
    rhs(kHalfBall, k, s.grid, lowered, s.sched, 0.0, out);
    for (int i = 0; i < s.grid.last(); ++i) EXPECT_NEAR(out[i], base[i] + c, 1e-12);
  }
}

TEST(Rhs, HyperbolicZeroIsSteady) {
  for (int k = 1; k <= 3; ++k) {
    const auto grid = make_grid(kHypBall, 64);
    const std::vector<double> u(grid.nodes.size(), 0.0);
    const auto sched = build_schedule(DirichletTarget{0.0}, constant_profile(0.0), grid, kHypBall, k);
    std::vector<double> out(u.size());
    ASSERT_EQ(rhs(kHypBall, k, grid, u, sched, 0.0, out), -1);
    EXPECT_LT(sup_abs(out), 1e-13);
  }
}

TEST(Rhs, BoundaryEntriesCarryTheScheduleSlope) {
  const auto grid = make_grid(kFlatBall, 64);
  const auto u0 = shifted(kPoincare.profile(), -1.0);
  const auto sched = build_schedule(LnTarget{LowSpeedFunction::linear(1, 1, 1)}, u0, grid, kFlatBall, 2);
  const auto u = sample(u0, grid);
  std::vector<double> out(u.size());
  for (double t : {0.0, 0.4, 3.0}) {
    rhs(kFlatBall, 2, grid, u, sched, t, out);
    EXPECT_DOUBLE_EQ(out.back(), sched.at_radius(1.0).eval(t).d1);
  }
}

TEST(StableDt, HyperbolicZeroClosedForm) {
  // T_0 = I and sigma_1 = 6, so every Qbar diagonal is (1 + 3) / 6.
  const auto grid = make_grid(kHypAnnulus, 50);
  const std::vector<double> u(grid.nodes.size(), 0.0);
  EXPECT_NEAR(max_diffusion(kHypAnnulus, 1, grid, u), 4.0 / 6.0, 1e-14);
  const double safety = 0.3;
  EXPECT_NEAR(stable_dt(kHypAnnulus, 1, grid, u, safety), 1.5 * safety * grid.h * grid.h, 1e-15);

  // On a ball the center node is n times stiffer.
  const auto ball = make_grid(kHypBall, 50);
  const std::vector<double> ub(ball.nodes.size(), 0.0);
  EXPECT_NEAR(max_diffusion(kHypBall, 1, ball, ub), 3.0 * 4.0 / 6.0, 1e-14);
}

TEST(StableDt, Scaling) {
  EXPECT_DOUBLE_EQ(dt_from_diffusion(0.01, 2, 3.0, 0.5), 2.0 * dt_from_diffusion(0.01, 2, 6.0, 0.5));
  EXPECT_DOUBLE_EQ(dt_from_diffusion(0.01, 2, 3.0, 0.5), 4.0 * dt_from_diffusion(0.005, 2, 3.0, 0.5));
  const auto coarse = make_grid(kHypAnnulus, 40), fine = make_grid(kHypAnnulus, 80);
  const std::vector<double> uc(coarse.nodes.size(), 0.0), uf(fine.nodes.size(), 0.0);
  EXPECT_NEAR(stable_dt(kHypAnnulus, 2, coarse, uc, 0.3) / stable_dt(kHypAnnulus, 2, fine, uf, 0.3), 4.0, 1e-12);
}

TEST(StableDt, OutsideConeIsInvalidState) {
  const auto grid = make_grid(kFlatBall, 32);
  const std::vector<double> u(grid.nodes.size(), 0.0);  // flat metric: all eigenvalues vanish
  EXPECT_THROW(stable_dt(kFlatBall, 1, grid, u, 0.3), SolverError);
}

class BothSchemes : public ::testing::TestWithParam<Scheme> {};

TEST_P(BothSchemes, SteadyStatePreservation) {
  for (int k = 1; k <= 3; ++k) {
    auto s = steady_half_ball(32, k);
    std::vector<double> f(s.u.size());
    rhs(kHalfBall, k, s.grid, s.u, s.sched, 0.0, f);
    const double r0 = sup_abs(f);
    auto cfg = quick(k, 32, 0.02);
    cfg.scheme = GetParam();
    double worst = 0.0;
    const auto result = run(kHalfBall, cfg, kPoincare.profile(), s.sched, [&](const Stepper& st) {
      double d = 0.0;
      for (std::size_t i = 0; i < s.u.size(); ++i) d = std::max(d, std::abs(st.state().u[i] - s.u[i]));
      worst = std::max(worst, d / (5.0 * r0 * st.state().t));
    });
    EXPECT_LE(worst, 1.0) << "k=" << k;
    double drift = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) drift = std::max(drift, std::abs(result.final_state.u[i] - s.u[i]));
    EXPECT_LT(drift, 5.0 * s.grid.h * s.grid.h);
  }
}

TEST_P(BothSchemes, MonotoneFromSubsolution) {
  for (int k = 1; k <= 3; ++k) {
    const auto grid = make_grid(kFlatBall, 32);
    const auto u0 = shifted(kPoincare.profile(), -1.0);
    const auto sched = build_schedule(LnTarget{LowSpeedFunction::linear(1, 1, 1)}, u0, grid, kFlatBall, k);
    auto cfg = quick(k, 32, 1.5);
    cfg.scheme = GetParam();
    cfg.upper_envelope = kPoincare.profile();
    std::vector<double> prev_boundary;
    bool boundary_monotone = true;
    const auto r = run(kFlatBall, cfg, u0, sched, [&](const Stepper& st) {
      const double b = st.state().u.back();
      if (!prev_boundary.empty() && b < prev_boundary.back()) boundary_monotone = false;
      prev_boundary.push_back(b);
    });
    EXPECT_TRUE(r.monitors.monotone_run);
    EXPECT_GE(r.monitors.min_ut, -cfg.mono_tol) << "k=" << k;
    EXPECT_TRUE(r.monitors.ut_bound_ok);
    EXPECT_LE(r.monitors.max_ut_interior, r.monitors.ut_upper_bound + cfg.ub_tol);
    EXPECT_GE(r.monitors.min_above_initial, -cfg.mono_tol);
    EXPECT_TRUE(r.monitors.sandwich_ok);
    EXPECT_TRUE(boundary_monotone);
    EXPECT_EQ(r.final_state.u.back(), sched.at_radius(1.0).eval(r.final_state.t).value);
  }
}

TEST_P(BothSchemes, ComparisonOfOrderedData) {
  const int k = 2;
  const auto grid = make_grid(kFlatBall, 32);
  const auto ub = shifted(kPoincare.profile(), -1.0), ua = shifted(kPoincare.profile(), -1.5);
  const auto sb = build_schedule(LnTarget{LowSpeedFunction::linear(1, 1, 1)}, ub, grid, kFlatBall, k);
  const auto sa = shifted_down(sb, 0.5);
  auto cfg = quick(k, 32, 1.5);
  cfg.scheme = GetParam();
  const auto p = run_paired(kFlatBall, cfg, ua, sa, ub, sb);
  EXPECT_LE(p.max_gap, 1e-8);
  EXPECT_EQ(p.a.steps, p.b.steps);
  EXPECT_NEAR(p.a.final_state.t, p.b.final_state.t, 0.0);
}

TEST_P(BothSchemes, DirichletConvergesToZero) {
  for (int k = 1; k <= 3; ++k) {
    const auto grid = make_grid(kHypBall, 24);
    const auto u0 = constant_profile(-1.0);
    const auto sched = build_schedule(DirichletTarget{0.0}, u0, grid, kHypBall, k);
    auto cfg = quick(k, 24, 20.0);
    cfg.scheme = GetParam();
    cfg.series_interval = 0.5;
    const auto r = run(kHypBall, cfg, u0, sched);
    EXPECT_LT(sup_abs(r.final_state.u), 1e-4) << "k=" << k;
    EXPECT_GE(r.monitors.min_ut, -cfg.mono_tol);
    EXPECT_LE(r.monitors.residual_ripple, 0.1);
  }
}

INSTANTIATE_TEST_SUITE_P(Flow, BothSchemes, ::testing::Values(Scheme::ExplicitRK2, Scheme::SemiImplicit),
                         [](const auto& info) { return info.param == Scheme::ExplicitRK2 ? "Explicit" : "SemiImplicit"; });

TEST(Run, ConvergenceStopsBeforeHorizon) {
  const auto grid = make_grid(kHypBall, 24);
  const auto u0 = constant_profile(-1.0);
  const auto sched = build_schedule(DirichletTarget{0.0}, u0, grid, kHypBall, 1);
  RunConfig cfg = quick(1, 24, 50.0);
  cfg.run_to_horizon = false;
  const auto r = run(kHypBall, cfg, u0, sched);
  EXPECT_EQ(r.termination, Termination::Converged);
  EXPECT_LT(r.final_state.t, cfg.t_max);
  EXPECT_LT(r.final_state.ut_sup_interior, cfg.ut_tol);
  EXPECT_LT(r.final_state.residual_sup, cfg.res_tol);
}

TEST(Run, SemiImplicitTakesFewerSteps) {
  const auto grid = make_grid(kHypBall, 24);
  const auto u0 = constant_profile(-1.0);
  const auto sched = build_schedule(DirichletTarget{0.0}, u0, grid, kHypBall, 1);
  auto cfg = quick(1, 24, 2.0);
  const auto ex = run(kHypBall, cfg, u0, sched);
  cfg.scheme = Scheme::SemiImplicit;
  const auto im = run(kHypBall, cfg, u0, sched);
  EXPECT_LT(im.steps * 5, ex.steps);
}

TEST(Run, SeriesAndSnapshots) {
  const auto grid = make_grid(kHypBall, 24);
  const auto u0 = constant_profile(-1.0);
  const auto sched = build_schedule(DirichletTarget{0.0}, u0, grid, kHypBall, 1);
  auto cfg = quick(1, 24, 1.0);
  cfg.series_interval = 0.25;
  cfg.snapshot_times = {0.0, 0.3, 1.0};
  const auto r = run(kHypBall, cfg, u0, sched);
  ASSERT_EQ(r.snapshots.size(), 3u);
  EXPECT_EQ(r.snapshots[0].state.t, 0.0);
  EXPECT_NEAR(r.snapshots[1].state.t, 0.3, 1e-12);
  EXPECT_NEAR(r.snapshots[2].state.t, 1.0, 1e-12);
  for (const auto& s : r.snapshots) {
    EXPECT_EQ(s.state.u.size(), grid.nodes.size());
    EXPECT_TRUE(std::isnan(s.state.residual.back()));
    EXPECT_GT(s.state.cone_margin, 0.0);
  }
  ASSERT_GE(r.series.size(), 5u);
  EXPECT_EQ(r.series.front().t, 0.0);
  for (std::size_t i = 1; i < r.series.size(); ++i) EXPECT_GT(r.series[i].t, r.series[i - 1].t);
  EXPECT_NEAR(r.series.back().t, r.final_state.t, 1e-12);
}

TEST(Run, IncompatibleStartIsRejected) {
  const auto grid = make_grid(kHypBall, 24);
  const auto sched = build_schedule(DirichletTarget{0.0}, constant_profile(-1.0), grid, kHypBall, 1);
  EXPECT_THROW(run(kHypBall, quick(1, 24, 1.0), constant_profile(-0.5), sched), ConstructionError);
}

TEST(Stepper, OversizedStepIsHalvedUntilAccepted) {
  const auto grid = make_grid(kFlatBall, 32);
  const auto u0 = shifted(kPoincare.profile(), -1.0);
  const auto sched = build_schedule(LnTarget{LowSpeedFunction::linear(1, 1, 1)}, u0, grid, kFlatBall, 3);
  Stepper st(kFlatBall, grid, quick(3, 32, 1.0), sched, sample(u0, grid));
  const double used = st.step(10.0);
  EXPECT_LT(used, 10.0);
  EXPECT_GT(st.rejections(), 0);
  EXPECT_EQ(st.steps(), 1);
  EXPECT_DOUBLE_EQ(st.state().t, used);
  FlowState s = st.state();
  refresh_state(kFlatBall, grid, sched, 3, 8, s);
  EXPECT_GT(s.cone_margin, 0.0);
}

TEST(AsymptoticFit, ZeroFunction) {
  const auto grid = make_grid(kFlatBall, 200);
  const std::vector<double> u(grid.nodes.size(), 0.0);
  const auto fit = ln_asymptotic_fit(grid, u, kFlatBall, 0.1, 0.2);
  EXPECT_NEAR(fit.sup, -std::log(0.1), 1e-9);
  EXPECT_NEAR(fit.min, -std::log(0.2), 1e-9);
  EXPECT_EQ(fit.nodes, 21);
}

TEST(AsymptoticFit, ExactSolutionBand) {
  const auto grid = make_grid(kFlatBall, 200);
  const auto u = sample(kPoincare.profile(), grid);
  const auto fit = ln_asymptotic_fit(grid, u, kFlatBall, 0.05, 0.2);
  EXPECT_NEAR(fit.min, std::log(2.0 / 1.95), 1e-9);
  EXPECT_NEAR(fit.sup, std::log(2.0 / 1.8), 1e-9);
  EXPECT_GT(fit.mean, fit.min);
  EXPECT_LT(fit.mean, fit.sup);

  double prev = INFINITY;
  for (double d : {0.4, 0.2, 0.1, 0.05, 0.02}) {
    const double sup = ln_asymptotic_fit(grid, u, kFlatBall, d, 2 * d).sup;
    EXPECT_LT(sup, prev);
    prev = sup;
  }
}

TEST(AsymptoticFit, EmptyWindow) {
  const auto grid = make_grid(kFlatBall, 20);
  const std::vector<double> u(grid.nodes.size(), 0.0);
  EXPECT_THROW(ln_asymptotic_fit(grid, u, kFlatBall, 0.11, 0.12), InvalidInput);
  EXPECT_THROW(ln_asymptotic_fit(grid, u, kFlatBall, 0.0, 0.12), InvalidInput);
}

TEST(InteriorWindow, ExcludesBoundaryLayer) {
  const auto grid = make_grid(kFlatBall, 100);
  const auto mask = interior_window(kFlatBall, grid, 8);
  EXPECT_TRUE(mask[0]);
  EXPECT_TRUE(mask[92]);
  EXPECT_FALSE(mask[93]);
  EXPECT_FALSE(mask[100]);
}

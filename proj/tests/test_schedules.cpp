#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "sigmaflow/error.hpp"
#include "sigmaflow/schedules.hpp"

using namespace sigmaflow;
using sigmaflow::testing::Gen;

namespace {

const BackgroundGeometry kFlatBall(3, Curvature::Flat, Ball{1.0});
const BackgroundGeometry kHypBall(3, Curvature::Hyperbolic, Ball{1.0});

LowSpeedFunction t_plus_one() { return LowSpeedFunction::linear(1.0, 1.0, 1.0); }

void expect_derivatives(const LowSpeedFunction& f, double t) {
  const double e = 1e-5 * std::max(1.0, t);
  EXPECT_NEAR(f.d1(t), (f.value(t + e) - f.value(t - e)) / (2 * e), 1e-7 * std::max(1.0, std::abs(f.d1(t))));
  EXPECT_NEAR(f.d2(t), (f.d1(t + e) - f.d1(t - e)) / (2 * e), 1e-6 * std::max(1.0, std::abs(f.d2(t))));
}

}  // namespace

TEST(LowSpeed, Examples) {
  EXPECT_NO_THROW(t_plus_one().validate());
  const auto t = LowSpeedFunction::linear(1.0, 0.0, 1.0);
  EXPECT_TRUE(t.speed_bound_holds());
  EXPECT_THROW(t.validate(), InvalidInput);  // xi(0) = 0 is not positive
  const auto ls = LowSpeedFunction::log_shift();
  EXPECT_DOUBLE_EQ(ls.tau, 1.0 / std::numbers::e);
  EXPECT_NO_THROW(ls.validate());
  EXPECT_FALSE(LowSpeedFunction::exponential(1.0).speed_bound_holds());
  EXPECT_THROW(LowSpeedFunction::exponential(1.0).validate(), InvalidInput);
  EXPECT_NO_THROW(LowSpeedFunction::power(0.5).validate());
  EXPECT_THROW(LowSpeedFunction::power(1.5).validate(), InvalidInput);
  for (int d = 1; d <= 3; ++d) {
    const auto il = LowSpeedFunction::iterated_log(d);
    EXPECT_NEAR(il.value(0.0), 1.0, 1e-14);
    EXPECT_NO_THROW(il.validate());
  }
}

TEST(LowSpeed, Derivatives) {
  for (const auto& f : {t_plus_one(), LowSpeedFunction::log_shift(), LowSpeedFunction::power(0.3),
                        LowSpeedFunction::iterated_log(2), LowSpeedFunction::iterated_log(3)}) {
    for (double t : {0.5, 3.0, 40.0}) expect_derivatives(f, t);
  }
}

TEST(LowSpeed, KindNames) {
  for (auto k : {LowSpeedFunction::Kind::Linear, LowSpeedFunction::Kind::LogShift, LowSpeedFunction::Kind::Power,
                 LowSpeedFunction::Kind::IteratedLog, LowSpeedFunction::Kind::Exponential}) {
    EXPECT_EQ(low_speed_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(low_speed_kind_from_string("cubic"), InvalidInput);
}

TEST(Quintic, MatchesBothJets) {
  Gen g(51);
  for (int trial = 0; trial < 200; ++trial) {
    const TimeJet a{g.uniform(-3, 3), g.uniform(-3, 3), g.uniform(-3, 3)};
    const TimeJet b{g.uniform(-3, 3), g.uniform(-3, 3), g.uniform(-3, 3)};
    const double T = g.uniform(0.2, 3.0);
    ComponentSchedule c;
    c.t_blend = 2 * T;  // keep evaluation on the polynomial
    c.quintic = quintic_hermite(a, b, T);
    const auto at0 = c.eval(0.0), atT = c.eval(T);
    EXPECT_NEAR(at0.value, a.value, 1e-12);
    EXPECT_NEAR(at0.d1, a.d1, 1e-12);
    EXPECT_NEAR(at0.d2, a.d2, 1e-12);
    EXPECT_NEAR(atT.value, b.value, 1e-9);
    EXPECT_NEAR(atT.d1, b.d1, 1e-9);
    EXPECT_NEAR(atT.d2, b.d2, 1e-9);
  }
}

TEST(Compat, ValueV) {
  const PoincareBall pb{1.0};
  const auto grid = make_grid(kFlatBall, 64);
  for (int k = 1; k <= 3; ++k) {
    for (double v : compat_value_v(pb.profile(), grid, kFlatBall, k)) EXPECT_NEAR(v, 0.0, 1e-12);
    for (double v : compat_value_v(shifted(pb.profile(), -1.0), grid, kFlatBall, k)) EXPECT_NEAR(v, 1.0, 1e-12);
  }
  const auto hg = make_grid(kHypBall, 32);
  for (double v : compat_value_v(constant_profile(-1.0), hg, kHypBall, 1)) EXPECT_NEAR(v, 1.0, 1e-15);
  try {
    compat_value_v(constant_profile(0.0), grid, kFlatBall, 1);
    FAIL() << "expected a cone violation";
  } catch (const ConeViolation& e) {
    EXPECT_GE(e.node(), 0);
  }
}

TEST(Compat, L0OnConstants) {
  const PoincareBall pb{1.0};
  for (int k = 1; k <= 3; ++k) {
    for (double r : {0.0, 0.4, 0.8}) {
      EXPECT_NEAR(apply_L0_at(kFlatBall, k, r, pb.jet(r), {2.5, 0, 0}), -2.0 * k * 2.5, 1e-12);
    }
  }
  const auto grid = make_grid(kFlatBall, 40);
  const auto u0 = sample(pb.profile(), grid);
  const auto y = apply_L0(kFlatBall, 2, grid, u0, std::vector<double>(u0.size(), 1.5));
  for (int i = 0; i < grid.size(); ++i) {
    if (grid.is_boundary(i)) {
      EXPECT_TRUE(std::isnan(y[i]));
    } else {
      EXPECT_NEAR(y[i], -6.0, 1e-10);
    }
  }
}

TEST(Compat, L0IsDirectionalDerivative) {
  const PoincareBall pb{1.0};
  Gen g(52);
  int used = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const double r = g.uniform(0.0, 0.9);
    const int k = g.integer(1, 3);
    const Jet u = pb.jet(r);
    const double a = g.uniform(-3, 3), b = g.uniform(-3, 3);
    // phi = a + b r^2, an even test function
    const Jet phi{a + b * r * r, 2 * b * r, 2 * b};
    const double L = apply_L0_at(kFlatBall, k, r, u, phi);
    std::vector<double> rem;
    for (double s : {1e-3, 1e-4, 1e-5}) {
      const Jet us{u.u + s * phi.u, u.du + s * phi.du, u.ddu + s * phi.ddu};
      const double fd = (residual(kFlatBall, k, r, us).value - residual(kFlatBall, k, r, u).value) / s;
      rem.push_back(std::abs(fd - L));
    }
    // Directions where the second variation nearly vanishes sit below rounding.
    if (rem[0] < 1e-5) continue;
    ++used;
    EXPECT_NEAR(rem[0] / rem[1], 10.0, 2.0);
    EXPECT_NEAR(rem[1] / rem[2], 10.0, 2.0);
  }
  EXPECT_GT(used, 150);
}

TEST(Compat, SteadyStateWithConstantScheduleAllPass) {
  const auto grid = make_grid(kHypBall, 32);
  const auto u0 = constant_profile(0.0);
  const auto sched = build_schedule(DirichletTarget{0.0}, u0, grid, kHypBall, 2);
  ASSERT_TRUE(std::holds_alternative<ConstantTail>(sched.components[0].tail));
  const auto rep = check_compatibility(u0, sched, grid, kHypBall, 2);
  ASSERT_EQ(rep.lines.size(), 1u);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.lines[0].clause14, CompatibilityLine::Clause::Pass);
}

TEST(Compat, StrictSubsolutionClauseNotApplicable) {
  const auto grid = make_grid(kHypBall, 32);
  const auto u0 = constant_profile(-1.0);
  const auto sched = build_schedule(DirichletTarget{0.0}, u0, grid, kHypBall, 1);
  const auto rep = check_compatibility(u0, sched, grid, kHypBall, 1);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.lines[0].clause14, CompatibilityLine::Clause::NotApplicable);
  EXPECT_EQ(to_string(rep.lines[0].clause14), "not applicable");
}

TEST(Compat, MismatchedValueReportsGap) {
  const auto grid = make_grid(kHypBall, 32);
  const auto u0 = constant_profile(-1.0);
  auto sched = build_schedule(DirichletTarget{0.0}, u0, grid, kHypBall, 1);
  const auto rep = check_compatibility(constant_profile(-1.25), sched, grid, kHypBall, 1);
  EXPECT_FALSE(rep.ok());
  EXPECT_FALSE(rep.lines[0].value_ok);
  EXPECT_NEAR(rep.lines[0].value_gap, 0.25, 1e-14);
}

TEST(Build, DirichletExponential) {
  const auto grid = make_grid(kHypBall, 32);
  const auto sched = build_schedule(DirichletTarget{0.0}, constant_profile(-1.0), grid, kHypBall, 1);
  for (double t : {0.0, 0.5, 3.0, 20.0}) {
    const auto j = sched.components[0].eval(t);
    EXPECT_NEAR(j.value, -std::exp(-t), 1e-15);
    EXPECT_NEAR(j.d1, std::exp(-t), 1e-15);
    EXPECT_NEAR(j.d2, -std::exp(-t), 1e-15);
  }
  EXPECT_GE(sched.min_slope(30.0), 0.0);
}

TEST(Build, DirichletGeneralBlend) {
  // k = 2 makes L0(v) differ from the pure exponential's curvature.
  const BackgroundGeometry ann(3, Curvature::Hyperbolic, Annulus{0.5, 1.5});
  const auto grid = make_grid(ann, 40);
  const auto u0 = constant_profile(-1.0);
  const auto sched = build_schedule(DirichletTarget{0.5}, u0, grid, ann, 2);
  EXPECT_EQ(sched.components.size(), 2u);
  EXPECT_GE(sched.min_slope(30.0), 0.0);
  EXPECT_TRUE(check_compatibility(u0, sched, grid, ann, 2).ok());
  EXPECT_NEAR(sched.components[1].eval(40.0).value, 0.5, 1e-12);
  EXPECT_THROW(build_schedule(DirichletTarget{-2.0}, u0, grid, ann, 2), ConstructionError);
}

TEST(Build, RejectsNonSubsolution) {
  const auto grid = make_grid(kHypBall, 32);
  EXPECT_THROW(build_schedule(DirichletTarget{2.0}, constant_profile(1.0), grid, kHypBall, 1), ConstructionError);
}

TEST(Build, LoewnerNirenbergFromShiftedPoincare) {
  const PoincareBall pb{1.0};
  const auto grid = make_grid(kFlatBall, 200);
  const auto u0 = shifted(pb.profile(), -1.0);
  const auto xi = t_plus_one();
  for (int k = 1; k <= 3; ++k) {
    const auto sched = build_schedule(LnTarget{xi}, u0, grid, kFlatBall, k);
    const auto& c = sched.components[0];
    const auto j0 = c.eval(0.0);
    EXPECT_NEAR(j0.value, pb.half_cell_trace(grid.h) - 1.0, 1e-12);
    EXPECT_NEAR(j0.d1, 1.0, 1e-9);
    const auto* tail = std::get_if<LogTail>(&c.tail);
    ASSERT_NE(tail, nullptr);
    EXPECT_GE(tail->offset, 0.0);
    EXPECT_GE(sched.min_slope(100.0), 0.0);
    EXPECT_GE(sched.min_floor_gap(1000.0), 0.0);
    EXPECT_TRUE(check_compatibility(u0, sched, grid, kFlatBall, k).ok());
    // the tail tracks log xi
    EXPECT_NEAR(c.eval(1e9).value - std::log(xi.value(1e9)), 0.0, 1e-6);
  }
}

TEST(Build, ShiftedDownStaysCompatibleAndOrdered) {
  const PoincareBall pb{1.0};
  const auto grid = make_grid(kFlatBall, 100);
  const auto u0 = shifted(pb.profile(), -1.0);
  const auto sched = build_schedule(LnTarget{t_plus_one()}, u0, grid, kFlatBall, 2);
  const auto low = shifted_down(sched, 0.5);
  EXPECT_TRUE(check_compatibility(shifted(u0, -0.5), low, grid, kFlatBall, 2).ok());
  EXPECT_GE(low.min_slope(50.0), 0.0);
  for (double t = 0; t < 50; t += 0.37) {
    EXPECT_NEAR(sched.components[0].eval(t).value - low.components[0].eval(t).value, 0.5 * std::exp(-t), 1e-12);
  }
  EXPECT_THROW(shifted_down(sched, -1.0), InvalidInput);
}

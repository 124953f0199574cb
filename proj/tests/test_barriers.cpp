#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "sigmaflow/barriers.hpp"
#include "sigmaflow/error.hpp"

using namespace sigmaflow;
using sigmaflow::testing::Gen;

namespace {

const BackgroundGeometry kFlatBall(3, Curvature::Flat, Ball{1.0});
const BackgroundGeometry kHypBall(3, Curvature::Hyperbolic, Ball{1.0});
const BackgroundGeometry kFlatAnnulus(3, Curvature::Flat, Annulus{0.5, 1.0});

BarrierSpec bridged(double A, double p) {
  BarrierSpec s;
  s.A = A;
  s.p = p;
  s.delta = 0.1;
  s.r0 = 0.1;
  return s.with_default_window();
}

}  // namespace

TEST(Eta, Branches) {
  const auto spec = bridged(2.0, 3.0);
  const auto [lo, hi] = *spec.smoothing;
  for (double s : {hi, hi + 0.5, hi + 10.0}) {
    const auto e = eta_cap(s, spec);
    EXPECT_DOUBLE_EQ(e.value, s);
    EXPECT_EQ(e.d1, 1.0);
    EXPECT_EQ(e.d2, 0.0);
  }
  for (double s : {lo, lo - 1.0}) {
    const auto e = eta_cap(s, spec);
    EXPECT_EQ(e.d1, 0.0);
    EXPECT_EQ(e.d2, 0.0);
  }
  EXPECT_DOUBLE_EQ(eta_cap(0.0, spec).value, 0.0);
}

TEST(Eta, ConvexMonotoneAndC2) {
  const auto spec = bridged(1.5, 2.0);
  const auto [lo, hi] = *spec.smoothing;
  double prev_value = -INFINITY;
  for (int i = 0; i <= 10000; ++i) {
    const double s = (lo - 1.0) + (hi - lo + 2.0) * i / 10000.0;
    const auto e = eta_cap(s, spec);
    EXPECT_GE(e.d1, 0.0);
    EXPECT_GE(e.d2, 0.0);
    EXPECT_GE(e.value, prev_value);
    prev_value = e.value;
    const double h = 1e-6 * (hi - lo);
    if (std::abs(s - lo) > 2 * h && std::abs(s - hi) > 2 * h) {
      EXPECT_NEAR(e.d1, (eta_cap(s + h, spec).value - eta_cap(s - h, spec).value) / (2 * h), 1e-6);
      EXPECT_NEAR(e.d2, (eta_cap(s + h, spec).d1 - eta_cap(s - h, spec).d1) / (2 * h), 1e-4 / (hi - lo));
    }
  }
  // continuity of value, slope and curvature at the joints
  for (double s : {lo, hi}) {
    const double h = 1e-9 * (hi - lo);
    EXPECT_NEAR(eta_cap(s - h, spec).value, eta_cap(s + h, spec).value, 3 * h);
    EXPECT_NEAR(eta_cap(s - h, spec).d1, eta_cap(s + h, spec).d1, 1e-8);
    EXPECT_NEAR(eta_cap(s - h, spec).d2, eta_cap(s + h, spec).d2, 1e-6 / (hi - lo));
  }
}

TEST(Eta, IdentityWithoutWindow) {
  BarrierSpec s;
  const auto e = eta_cap(-3.0, s);
  EXPECT_EQ(e.value, -3.0);
  EXPECT_EQ(e.d1, 1.0);
}

TEST(Spec, Validation) {
  BarrierSpec s;
  s.p = 1.0;
  EXPECT_THROW(s.validate(), InvalidInput);
  s = BarrierSpec{};
  s.smoothing = BarrierSpec::Window{0.0, -1.0};
  EXPECT_THROW(s.validate(), InvalidInput);
}

TEST(GlobalSubsolution, AnchorFarBranchAndMonotone) {
  const auto spec = bridged(1.0, 2.0);
  const auto u = global_subsolution(kHypBall, spec);
  EXPECT_EQ(u.jet(1.0).u, 0.0);
  // rt = 1.1 - r >= r0 + 2 delta, i.e. r <= 0.8, is the constant branch
  const double c = u.jet(0.8).u;
  for (double r : {0.0, 0.3, 0.79}) {
    EXPECT_EQ(u.jet(r).u, c);
    EXPECT_EQ(u.jet(r).du, 0.0);
  }
  // nonincreasing in the distance rt to the anchor, i.e. nondecreasing in r
  const auto grid = make_grid(kHypBall, 400);
  for (int i = 1; i < grid.size(); ++i) {
    EXPECT_GE(u.jet(grid.nodes[i]).u, u.jet(grid.nodes[i - 1]).u);
    EXPECT_LE(u.jet(grid.nodes[i]).u, 0.0);
  }
}

TEST(GlobalSubsolution, JetMatchesFiniteDifference) {
  const auto u = global_subsolution(kFlatAnnulus, bridged(3.0, 2.0));
  for (double r = 0.52; r < 0.99; r += 0.013) {
    const double h = 1e-6;
    EXPECT_NEAR(u.jet(r).du, (u.jet(r + h).u - u.jet(r - h).u) / (2 * h), 1e-5 * std::max(1.0, std::abs(u.jet(r).du)));
    EXPECT_NEAR(u.jet(r).ddu, (u.jet(r + h).du - u.jet(r - h).du) / (2 * h),
                1e-5 * std::max(1.0, std::abs(u.jet(r).ddu)));
  }
}

TEST(Verify, Examples) {
  // constant -1 on the hyperbolic ball: beta_bar (1 - e^-2)
  const auto grid = make_grid(kHypBall, 64);
  const auto rep = verify_subsolution(sample_jets(constant_profile(-1.0), grid.nodes), kHypBall, 1, VerifyMode::Elliptic);
  EXPECT_NEAR(rep.min_margin, 6.0 * (1.0 - std::exp(-2.0)), 1e-12);
  EXPECT_NEAR(rep.min_margin, 5.1880, 5e-5);
  EXPECT_TRUE(rep.is_strict);

  // Poincare metric is the equality case; compare against the sigma_k scale.
  const BackgroundGeometry small(3, Curvature::Flat, Ball{0.5});
  const PoincareBall pb{1.0};
  const auto sg = make_grid(small, 200);
  for (int k = 1; k <= 3; ++k) {
    const auto eq = verify_subsolution(sample_jets(pb.profile(), sg.nodes), small, k, VerifyMode::Elliptic);
    EXPECT_TRUE(eq.cone_ok);
    const double scale = beta_bar(k, 3) * std::exp(2.0 * k * pb.value(0.5));
    EXPECT_LE(std::abs(eq.min_margin) / scale, 1e-12);
    EXPECT_FALSE(eq.is_strict && eq.min_margin > 1e-10 * scale);
  }

  // constant on the flat ball is outside every cone
  const auto fg = make_grid(kFlatBall, 16);
  const auto bad = verify_subsolution(sample_jets(constant_profile(-1.0), fg.nodes), kFlatBall, 1, VerifyMode::Elliptic);
  EXPECT_FALSE(bad.cone_ok);
  EXPECT_EQ(bad.cone_violations.size(), fg.nodes.size());
  EXPECT_FALSE(bad.is_strict);
}

TEST(Verify, ParabolicNeedsTimeDerivative) {
  const auto grid = make_grid(kHypBall, 16);
  EXPECT_THROW(verify_subsolution(sample_jets(constant_profile(-1.0), grid.nodes), kHypBall, 1, VerifyMode::Parabolic),
               InvalidInput);
}

TEST(Verify, MaclaurinCascade) {
  // a strict sigma_n subsolution is a subsolution for every smaller k
  Gen g(61);
  for (int trial = 0; trial < 50; ++trial) {
    const auto spec = bridged(std::ldexp(1.0, g.integer(0, 4)), std::ldexp(1.0, g.integer(1, 3)));
    const auto grid = make_grid(kHypBall, 100);
    const auto f = sample_jets(global_subsolution(kHypBall, spec), grid.nodes);
    const auto top = verify_subsolution(f, kHypBall, 3, VerifyMode::Elliptic);
    if (!top.is_strict) continue;
    for (int k = 1; k < 3; ++k) EXPECT_TRUE(verify_subsolution(f, kHypBall, k, VerifyMode::Elliptic).is_strict);
  }
}

TEST(GlobalSubsolution, SearchSucceedsWhereRadiallyPossible) {
  for (int k = 1; k <= 3; ++k) {
    const auto hg = make_grid(kHypBall, 200);
    const auto hyp = search_global_subsolution(kHypBall, hg, k, 0.1, 0.1, true);
    ASSERT_TRUE(hyp.found.has_value());
    EXPECT_TRUE(hyp.report.is_strict);
    EXPECT_GT(hyp.report.min_margin, 0.0);

    const auto ag = make_grid(kFlatAnnulus, 200);
    const auto ann = search_global_subsolution(kFlatAnnulus, ag, k, 0.1, 0.1, false);
    ASSERT_TRUE(ann.found.has_value());
    EXPECT_TRUE(ann.report.is_strict);
  }
}

TEST(GlobalSubsolution, FlatBallHasNoRadialCapSubsolution) {
  // The capped profile is constant near the center, where the flat tensor vanishes.
  const auto grid = make_grid(kFlatBall, 100);
  const auto s = search_global_subsolution(kFlatBall, grid, 1, 0.1, 0.1, true);
  EXPECT_FALSE(s.found.has_value());
  EXPECT_FALSE(s.rows.empty());
}

TEST(LowerBarrier, BoundaryValueAndSigns) {
  const auto xi = LowSpeedFunction::linear(1.0, 1.0, 1.0);
  BarrierSpec spec;
  spec.A = 16;
  spec.p = 2;
  spec.delta = 0.5;
  for (double t : {0.0, 5.0, 100.0}) {
    const auto sl = boundary_lower_barrier(kFlatBall, spec, xi, t);
    EXPECT_NEAR(sl.u.jet(1.0).u, std::log(xi.value(t)), 1e-13);
    EXPECT_DOUBLE_EQ(sl.epsilon, 1.0 / (t + 1.0));
    for (double rho = 0.0; rho <= 0.5; rho += 0.01) {
      const double r = 1.0 - rho;
      const double w = sl.u.jet(r).u + std::log(rho + sl.epsilon);
      EXPECT_LE(w, 1e-15);
      EXPECT_GE(sl.u_t(r), 0.0);
      // monotone in t
      EXPECT_GE(boundary_lower_barrier(kFlatBall, spec, xi, t + 1.0).u.jet(r).u, sl.u.jet(r).u);
    }
  }
  // u_t against a time difference, r jets against space differences
  const double t = 7.0, r = 0.97, h = 1e-6;
  const double ut_fd = (boundary_lower_barrier(kFlatBall, spec, xi, t + h).u.jet(r).u -
                        boundary_lower_barrier(kFlatBall, spec, xi, t - h).u.jet(r).u) / (2 * h);
  const auto sl = boundary_lower_barrier(kFlatBall, spec, xi, t);
  EXPECT_NEAR(sl.u_t(r), ut_fd, 1e-7);
  EXPECT_NEAR(sl.u.jet(r).du, (sl.u.jet(r + h).u - sl.u.jet(r - h).u) / (2 * h), 1e-5);
  EXPECT_NEAR(sl.u.jet(r).ddu, (sl.u.jet(r + h).du - sl.u.jet(r - h).du) / (2 * h), 1e-3);
}

TEST(LowerBarrier, ParabolicSubsolutionOnStrip) {
  const auto xi = LowSpeedFunction::linear(1.0, 1.0, 1.0);
  const auto found = search_boundary_barrier(kFlatBall, xi, 3, 0.5, 24.0, 1e4);
  ASSERT_TRUE(found.found.has_value());
  EXPECT_GE(found.found->A * found.found->p, 24.0);
  EXPECT_GE(found.check.min_margin, 0.0);
  EXPECT_TRUE(found.check.cone_ok);
  // k < n by the Maclaurin chain
  for (int k = 1; k < 3; ++k) {
    const auto c = check_barrier_strip(kFlatBall, *found.found, xi, k, 1.0 / 24.0, 24.0, 1e4, 100, 100);
    EXPECT_GE(c.min_margin, 0.0);
  }
  EXPECT_THROW(check_barrier_strip(kFlatBall, *found.found, xi, 3, 1.0 / 24.0, 1.0, 10.0), InvalidInput);
}

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rpmap/error.hpp"
#include "rpmap/floquet.hpp"
#include "support.hpp"

namespace rpmap {
namespace {

using testing::point;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

TEST(FindPeriodicOrbit, StableRadiusFromNearbyGuess) {
  const SdeModel m = reference_model(1.0, 0.1);
  const PeriodicOrbit o = find_periodic_orbit(m, point({1.1}));
  EXPECT_NEAR(o.chart_point[0], 1.0, 1e-8);
  EXPECT_NEAR(o.period, kTwoPi, 1e-8);
  EXPECT_LE(o.closure, 1e-10);
  EXPECT_TRUE(o.stable);
  EXPECT_FALSE(o.samples.empty());
}

TEST(FindPeriodicOrbit, DeepRadius) {
  const PeriodicOrbit o = find_periodic_orbit(reference_model(1.0, 0.1), point({2.0}));
  EXPECT_NEAR(o.chart_point[0], 2.2, 1e-8);
  EXPECT_TRUE(o.stable);
}

TEST(FindPeriodicOrbit, NewtonAlsoFindsTheUnstableRadius) {
  const PeriodicOrbit o = find_periodic_orbit(reference_model(1.0, 0.1), point({1.52}));
  EXPECT_NEAR(o.chart_point[0], 1.5, 1e-8);
  EXPECT_FALSE(o.stable);
}

TEST(FindPeriodicOrbit, PeriodScalesWithOmega) {
  const PeriodicOrbit o = find_periodic_orbit(reference_model(2.0, 0.0), point({1.05}));
  EXPECT_NEAR(o.period, kTwoPi / 2.0, 1e-8);
}

TEST(Monodromy, MultipliersOfTheStableOrbits) {
  const SdeModel m = reference_model(1.0, 0.1);
  for (double r : {1.0, 2.2}) {
    const double vpp = r == 1.0 ? (-0.5) * (-1.2) : (1.2) * (0.7);
    const PeriodicOrbit o = find_periodic_orbit(m, point({r + 0.05}));
    const Monodromy mono = monodromy(m, o);
    ASSERT_EQ(mono.multipliers.size(), 2u);
    EXPECT_NEAR(std::abs(mono.trivial - 1.0), 0.0, 1e-6);
    EXPECT_LE(mono.trivial_angle, 1e-4);
    EXPECT_NEAR(mono.multipliers[1].real(), std::exp(-vpp * o.period), 1e-5) << "r = " << r;
    EXPECT_NEAR(mono.liouville_det, std::exp(-vpp * o.period), 1e-5);
  }
}

TEST(Monodromy, UnstableOrbitHasAnExpandingMultiplier) {
  const SdeModel m = reference_model(1.0, 0.1);
  const PeriodicOrbit o = find_periodic_orbit(m, point({1.5}));
  const Monodromy mono = monodromy(m, o);
  // V''(1.5) = (0.5)(-0.7) = -0.35.
  EXPECT_GT(std::abs(mono.multipliers[0]), 1.0);
  EXPECT_NEAR(mono.multipliers[0].real(), std::exp(0.35 * kTwoPi), 1e-3 * std::exp(0.35 * kTwoPi));
  EXPECT_NEAR(std::abs(mono.trivial - 1.0), 0.0, 1e-6);
}

TEST(DriftJacobian, RadialModel) {
  const SdeModel m = reference_model(1.0, 0.1);
  const Eigen::MatrixXd J = drift_jacobian(m, point({1.0, 0.3}));
  EXPECT_NEAR(J(0, 0), -0.6, 1e-8);
  EXPECT_NEAR(J(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(J(1, 0), 0.0, 1e-12);
  EXPECT_NEAR(J(1, 1), 0.0, 1e-12);
}

TEST(FindPeriodicOrbit, IterationBudgetExhaustedFails) {
  OrbitOptions opt;
  opt.max_iterations = 1;
  try {
    find_periodic_orbit(reference_model(1.0, 0.1), point({1.3}), opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConvergence);
  }
}

}  // namespace
}  // namespace rpmap

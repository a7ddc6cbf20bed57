#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "rpmap/error.hpp"
#include "rpmap/poincare.hpp"
#include "support.hpp"

namespace rpmap {
namespace {

using testing::K3;
using testing::point;

TEST(Grid, LocateCenterRoundTrip) {
  const Grid g = Grid::uniform(point({0.0, -1.0}), point({2.0, 1.0}), {4, 5});
  EXPECT_EQ(g.size(), 20u);
  for (std::size_t c = 0; c < g.size(); ++c) EXPECT_EQ(g.locate(g.center(c)), c);
  EXPECT_NEAR(g.volume(0), 0.5 * 0.4, 1e-15);
  // First axis slowest.
  EXPECT_EQ(g.locate(point({0.1, 0.9})), 4u);
  EXPECT_EQ(g.locate(point({1.9, -0.9})), 15u);
}

TEST(Grid, ClampsOutsidePoints) {
  const Grid g = Grid::uniform(point({0.5}), point({3.0}), {10});
  EXPECT_EQ(g.locate(point({-4.0})), 0u);
  EXPECT_EQ(g.locate(point({9.0})), 9u);
}

TEST(Grid, RejectsDegenerateAxis) {
  EXPECT_THROW(Grid::uniform(point({0.0}), point({0.0}), {3}), Error);
  EXPECT_THROW(Grid::uniform(point({0.0}), point({1.0}), {0}), Error);
}

TEST(SampleChain, FixedPointWithoutNoise) {
  const SdeModel m = reference_model(1.0, 0.0);
  const CrossingChain c = sample_chain(m, point({1.0}), 20, 0.01, 1);
  // x0 itself is not recorded: one point per crossing.
  ASSERT_EQ(c.points.size(), 20u);
  for (const State& x : c.points) EXPECT_NEAR(x[0], 1.0, 1e-12);
}

TEST(SampleChain, ContractsMonotonicallyTowardStableRadius) {
  const SdeModel m = reference_model(1.0, 0.0);
  const CrossingChain c = sample_chain(m, point({1.2}), 10, 0.001, 1);
  // Past the fifth return the gap to 1 falls below double resolution.
  for (std::size_t n = 1; n < 5; ++n) {
    EXPECT_LT(c.points[n][0], c.points[n - 1][0]);
    EXPECT_GT(c.points[n][0], 1.0);
  }
  for (const State& x : c.points) EXPECT_GE(x[0], 1.0);
  EXPECT_LT(c.points.back()[0] - 1.0, 1e-6);
  // One period of r' = -V'(r) near r = 1 contracts by about exp(-0.6 * 2 pi).
  EXPECT_NEAR((c.points[2][0] - 1.0) / (c.points[1][0] - 1.0), std::exp(-0.6 * 2.0 * std::numbers::pi), 0.01);
}

TEST(SampleChain, NoisyChainConcentratesNearStableOrbit) {
  const SdeModel m = reference_model(1.0, 0.1);
  const CrossingChain c = sample_chain(m, point({1.0}), 10000, 0.01, 3);
  std::size_t near = 0;
  // The chain leaves r = 1 over the lower barrier within a few hundred
  // returns and then sits at the deeper orbit r = 2.2.
  for (const State& x : c.points) near += std::abs(x[0] - 1.0) <= 0.15 || std::abs(x[0] - 2.2) <= 0.15;
  EXPECT_GT(static_cast<double>(near) / static_cast<double>(c.points.size()), 0.9);
}

TEST(BuildKernel, DeterministicRowsAreUnitMasses) {
  const SdeModel m = reference_model(1.0, 0.0);
  const Grid g = section_grid(m, {25});
  const DiscretizedKernel K = build_kernel(m, g, 100, 0.01, 1);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const State image = deterministic_return(m, g.center(c), 0.01, 100.0);
    EXPECT_DOUBLE_EQ(K.matrix(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(g.locate(image))), 1.0);
  }
}

TEST(BuildKernel, RowsAreNormalizedCounts) {
  const SdeModel m = reference_model(1.0, 0.3);
  const DiscretizedKernel K = build_kernel(m, section_grid(m, {30}), 200, 0.01, 2);
  EXPECT_FALSE(K.has_kill());
  for (Eigen::Index i = 0; i < K.matrix.rows(); ++i) {
    EXPECT_NEAR(K.matrix.row(i).sum(), 1.0, 1e-14);
    EXPECT_GE(K.matrix.row(i).minCoeff(), 0.0);
    EXPECT_EQ(K.sample_counts[static_cast<std::size_t>(i)], 200);
  }
}

TEST(BuildKernel, KilledVariantCarriesAKillColumn) {
  SdeModel m = reference_model(1.0, 0.5);
  m.confinement = Confinement::KilledB;
  const DiscretizedKernel K = build_kernel(m, section_grid(m, {20}), 200, 0.01, 2);
  ASSERT_TRUE(K.has_kill());
  EXPECT_GT(K.kill_column.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < K.matrix.rows(); ++i) {
    EXPECT_NEAR(K.matrix.row(i).sum() + K.kill_column[i], 1.0, 1e-14);
  }
}

TEST(BuildKernel, RowsNearStableRadiusStayNear) {
  const SdeModel m = reference_model(1.0, 0.1);
  const Grid g = section_grid(m, {200});
  const DiscretizedKernel K = build_kernel(m, g, 200, 0.01, 4);
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (std::abs(g.center(c)[0] - 1.0) > 0.05) continue;
    double mass = 0.0;
    for (std::size_t d = 0; d < g.size(); ++d) {
      if (std::abs(g.center(d)[0] - 1.0) <= 0.3) mass += K.matrix(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(d));
    }
    // Escapes over r = 1.5 happen with probability of order exp(-0.0396 / 0.01) per return.
    EXPECT_GE(mass, 0.9) << "cell " << c;
  }
}

TEST(BuildKernel, IndependentOfThreadCount) {
  const SdeModel m = reference_model(1.0, 0.2);
  const Grid g = section_grid(m, {16});
  BuildOptions one;
  one.threads = 1;
  BuildOptions four;
  four.threads = 4;
  const DiscretizedKernel a = build_kernel(m, g, 100, 0.01, 9, one);
  const DiscretizedKernel b = build_kernel(m, g, 100, 0.01, 9, four);
  EXPECT_EQ(a.matrix, b.matrix);
}

TEST(BuildKernel, RejectsTooFewSamples) {
  const SdeModel m = reference_model(1.0, 0.1);
  EXPECT_THROW(build_kernel(m, section_grid(m, {10}), 50, 0.01, 1), Error);
}

TEST(IterateKernel, OneStepIsIdentity) {
  const DiscretizedKernel K = DiscretizedKernel::from_matrix(K3());
  EXPECT_EQ(iterate_kernel(K, 1).matrix, K.matrix);
}

TEST(IterateKernel, PowersAssociate) {
  std::mt19937_64 gen(5);
  const DiscretizedKernel K = DiscretizedKernel::from_matrix(testing::random_stochastic(6, gen));
  const Eigen::MatrixXd a = iterate_kernel(iterate_kernel(K, 2), 3).matrix;
  const Eigen::MatrixXd b = iterate_kernel(K, 6).matrix;
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IterateKernel, ThreeStateSquare) {
  const Eigen::MatrixXd m = iterate_kernel(DiscretizedKernel::from_matrix(K3()), 2).matrix;
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(m(i, i), 0.66, 1e-15);
}

}  // namespace
}  // namespace rpmap

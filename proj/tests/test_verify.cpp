#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rpmap/error.hpp"
#include "rpmap/verify.hpp"
#include "support.hpp"

namespace rpmap {
namespace {

using testing::K3;
using testing::toy;
using testing::toy_structure;

ErrorCode code_of(const auto& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::runtime_error("no error raised");
}

TEST(EstimateExponent, ExactExponential) {
  std::vector<std::pair<double, double>> pts;
  for (double s : {0.1, 0.12, 0.15}) pts.emplace_back(s, std::exp(-0.04 / (s * s)));
  const ExponentFit fit = estimate_exponent(pts);
  EXPECT_NEAR(fit.H, 0.04, 1e-12);
  EXPECT_NEAR(fit.intercept, 0.0, 1e-10);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
}

TEST(EstimateExponent, MultiplicativeNoise) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> noise(0.9, 1.1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 10; ++i) {
      const double s = 0.08 + 0.12 * i / 9.0;
      pts.emplace_back(s, 0.5 * std::exp(-0.04 / (s * s)) * noise(gen));
    }
    EXPECT_NEAR(estimate_exponent(pts).H, 0.04, 0.05 * 0.04) << "trial " << trial;
  }
}

TEST(EstimateExponent, Degenerate) {
  EXPECT_EQ(code_of([] { estimate_exponent({{0.1, 0.2}, {0.1, 0.3}, {0.1, 0.1}}); }), ErrorCode::DegenerateFit);
  EXPECT_EQ(code_of([] { estimate_exponent({{0.1, 0.2}, {0.2, 0.3}}); }), ErrorCode::DegenerateFit);
  EXPECT_EQ(code_of([] { estimate_exponent({{0.1, 0.2}, {0.2, 1.0}, {0.3, 0.5}}); }), ErrorCode::InvalidArgument);
}

TEST(ExactSuite, PassesOnToyChains) {
  std::mt19937_64 gen(22);
  std::vector<DiscretizedKernel> kernels{toy(K3()), toy(testing::random_stochastic(12, gen)),
                                         toy(testing::random_stochastic(20, gen))};
  const std::vector<std::vector<CellSet>> sets{{{0}, {2}}, {{0, 1, 2}, {7, 8}}, {{0, 1}, {9, 10, 11}, {17}}};
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    for (const VerificationReport& r : run_exact_suite(kernels[i], sets[i], 3)) {
      EXPECT_TRUE(r.pass) << r.check_name << " kernel " << i << ": " << r.note;
    }
  }
}

TEST(ExactSuite, PassesOnABuiltKernel) {
  const auto& ref = testing::small_reference();
  const auto reports = run_exact_suite(ref.K, ref.s.balls, 2);
  EXPECT_EQ(reports.size(), 7u);
  for (const VerificationReport& r : reports) EXPECT_TRUE(r.pass) << r.check_name << ": " << r.note;
}

TEST(CheckGap, ToyChainWithoutStructureIsReportOnly) {
  const DiscretizedKernel K = toy(K3());
  const VerificationReport r = check_gap({Level{0.0, &K, nullptr}});
  ASSERT_FALSE(r.measured.empty());
  EXPECT_NEAR(r.measured[0], 0.7, 1e-12);
}

TEST(CheckHittingTimes, SingleCellBallsMatchTheGeometricLaw) {
  Eigen::MatrixXd m(2, 2);
  m << 0.999, 0.001, 0.02, 0.98;
  const DiscretizedKernel K = toy(m);
  const MetastableStructure s = toy_structure({{0}, {1}});
  const VerificationReport r = check_hitting_times(K, s, 1);
  // E_1[tau_0] = 1 / 0.02 and the escape probability from the point mass is 0.02.
  EXPECT_EQ(r.labels[1], "E[tau] mean vs 1/escape");
  EXPECT_NEAR(r.predicted[1], 50.0, 1e-10);
  EXPECT_NEAR(r.measured[1], 50.0, 1e-10);
  EXPECT_NEAR(r.predicted[0], 1.0 / 0.021, 1e-9);
}

TEST(EscapeProbability, MatchesCatalogTransitionProbability) {
  const auto& ref = testing::small_reference();
  // Ordered ball 2 is catalog ball order[1].
  const double a = escape_probability(ref.K, ref.s, 1);
  const double b = transition_probability(ref.K, ref.s, ref.s.order[1], ref.s.order[0]);
  EXPECT_NEAR(a, b, 1e-12 * a);
}

TEST(CheckEigenvalues, TopEigenvaluesAreReal) {
  const auto& ref = testing::small_reference();
  const VerificationReport r = check_eigenvalues(ref.K, ref.s, 0.1);
  EXPECT_FALSE(r.labels.empty());
  EXPECT_EQ(r.sigma_values, std::vector<double>{0.1});
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    if (r.labels[i].rfind("max |Im", 0) == 0) EXPECT_LE(r.measured[i], 1e-8);
  }
}

TEST(RegressExponents, CoincidingNoiseLevelsAreDegenerate) {
  const auto& ref = testing::small_reference();
  const Level l{0.1, &ref.K, &ref.s};
  EXPECT_EQ(code_of([&] { regress_exponents({l, l, l}); }), ErrorCode::DegenerateFit);
}

TEST(Certificates, ReportEveryIterate) {
  const auto& ref = testing::small_reference();
  const auto cs = run_certificates(ref.K, ref.s, {1, 4});
  int finite_rank = 0, resolvent = 0;
  for (const BoundCertificate& c : cs) {
    finite_rank += c.name.rfind("trace vs finite rank", 0) == 0;
    resolvent += c.name == "resolvent on the contour";
    EXPECT_TRUE(c.measured_value.has_value()) << c.name;
  }
  EXPECT_EQ(finite_rank, 2);
  EXPECT_EQ(resolvent, 1);
}

}  // namespace
}  // namespace rpmap

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Builds the reference kernels at 200 cells x 2000 samples.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rpmap/error.hpp"
#include "rpmap/floquet.hpp"
#include "rpmap/verify.hpp"

using namespace rpmap;

namespace {

constexpr double kDelta = 0.25;
constexpr int kCells = 200;
constexpr int kSamples = 2000;
constexpr double kDt = 0.01;
constexpr std::uint64_t kSeed = 1;
const std::vector<double> kSigma2{0.02, 0.015, 0.01};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d %s: %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

void detail(const std::string& s) {
  std::printf("    %s\n", s.c_str());
  std::fflush(stdout);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void show(const VerificationReport& r) {
  detail(r.check_name + (r.pass ? " pass" : " FAIL") + (r.note.empty() ? "" : " (" + r.note + ")"));
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    detail("  " + r.labels[i] + ": predicted " + fmt(r.predicted[i]) + ", measured " + fmt(r.measured[i]) +
           ", error " + fmt(r.relative_errors[i]));
  }
}

struct Built {
  double sigma2;
  SdeModel model;
  DiscretizedKernel K;
  MetastableStructure s;
};

Built build(double sigma2, std::uint64_t seed) {
  Built b;
  b.sigma2 = sigma2;
  b.model = reference_model(1.0, std::sqrt(sigma2));
  const auto t0 = Clock::now();
  b.K = build_kernel(b.model, section_grid(b.model, {kCells}), kSamples, kDt, seed);
  b.s = detect_balls(b.K, b.model, kDelta);
  apply_hierarchy(b.s, b.model.barrier_exponents, "analytic");
  detail("built sigma^2 = " + fmt(sigma2) + " seed " + std::to_string(seed) + " in " + fmt(seconds_since(t0)) + " s");
  return b;
}

Eigen::MatrixXd K3() {
  Eigen::MatrixXd m(3, 3);
  m << 0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8;
  return m;
}

Eigen::MatrixXd random_stochastic(Eigen::Index n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = u(gen);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

Eigen::MatrixXd random_metastable(Eigen::Index m, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index k = m - 1;
  const double a_hat = 0.05 + 0.9 * u(gen);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index l = 0; l <= k; ++l) {
    const double out = l < k ? a_hat / 8.0 * 0.999 * u(gen) : a_hat;
    Eigen::RowVectorXd w(m);
    for (Eigen::Index j = 0; j < m; ++j) w[j] = j == l ? 0.0 : u(gen);
    P.row(l) = w * (out / w.sum());
    P(l, l) = 1.0 - out;
  }
  return P;
}

bool exact_suite_passes(const DiscretizedKernel& K, const std::vector<CellSet>& sets, const std::string& tag) {
  bool ok = true;
  for (const VerificationReport& r : run_exact_suite(K, sets, 3)) {
    if (!r.pass) {
      detail(tag + ": " + r.check_name + " failed (" + r.note + ")");
      ok = false;
    }
  }
  return ok;
}

void criterion_exact(const std::vector<Built>& kernels) {
  const auto t0 = Clock::now();
  bool ok = true;
  int count = 0;
  std::mt19937_64 gen(101);
  const DiscretizedKernel toys[] = {DiscretizedKernel::from_matrix(K3()),
                                    DiscretizedKernel::from_matrix(random_stochastic(10, gen)),
                                    DiscretizedKernel::from_matrix(random_stochastic(25, gen))};
  const std::vector<CellSet> toy_sets[] = {{{0}, {2}}, {{0, 1}, {6, 7, 8}}, {{0, 1, 2}, {10, 11}, {20, 24}}};
  for (int i = 0; i < 3; ++i, ++count) ok = exact_suite_passes(toys[i], toy_sets[i], "toy " + std::to_string(i)) && ok;
  for (const Built& b : kernels) {
    ok = exact_suite_passes(b.K, b.s.balls, "sigma^2 " + fmt(b.sigma2)) && ok;
    ++count;
  }
  const double t = seconds_since(t0);
  verdict(1, "exact-identity suite", ok && t < 10.0,
          std::to_string(count) + " kernels, 7 identities each, " + fmt(t) + " s (limit 10 s)");
}

void criterion_block() {
  const auto t0 = Clock::now();
  Eigen::MatrixXd Phat(2, 2);
  const double a = 0.01, b = 0.2;
  Phat << a, -a, -b, b;
  const BlockTriangularization bt = block_triangularize(Phat);
  const bool analytic = std::abs(bt.S12[0] + a / b) <= 1e-12 && std::abs(bt.alpha - (a + b)) <= 1e-12;

  std::mt19937_64 gen(202);
  int good = 0;
  double worst_residual = 0.0;
  int strict_held = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index m = 2 + trial % 5;
    const Eigen::MatrixXd P = random_metastable(m, gen);
    try {
      const KStarSpectrum ks = kstar_spectrum(P);
      const BlockTriangularization& t = ks.triangularization;
      worst_residual = std::max(worst_residual, t.residual);
      bool ok = t.contraction_ok && t.residual <= 1e-12;
      for (const BoundCertificate& c : ks.bounds) {
        if (c.asserted) ok = ok && c.satisfied;
        if (!c.asserted) strict_held += c.satisfied;
      }
      good += ok;
    } catch (const Error& e) {
      detail("trial " + std::to_string(trial) + ": " + e.what());
    }
  }
  const double t = seconds_since(t0);
  detail("report-only |1 - lambda_i| <= 4 |Phat12| held in " + std::to_string(strict_held) + "/1000");
  verdict(2, "block-triangularization suite", analytic && good == 1000 && t < 5.0,
          "2x2 S12 = " + fmt(bt.S12[0]) + ", alpha = " + fmt(bt.alpha) + "; " + std::to_string(good) +
              "/1000 random matrices, worst ||Phat S - S T|| = " + fmt(worst_residual) + ", " + fmt(t) +
              " s (limit 5 s)");
}

void criterion_theorems(const std::vector<Built>& kernels) {
  const Built& fine = kernels.back();
  const auto ev = sorted_eigenvalues(fine.K.matrix);
  int above = 0;
  double imag = 0.0;
  for (const auto& l : ev) {
    if (std::abs(l) > 0.99) {
      ++above;
      imag = std::max(imag, std::abs(l.imag()));
    }
  }
  const bool a = above == 2 && imag <= 1e-8;
  detail("(a) " + std::to_string(above) + " eigenvalues above 0.99 in modulus: lambda_1 = " + fmt(ev[1].real()) +
         ", |lambda_2| = " + fmt(std::abs(ev[2])) + ", max |Im| = " + fmt(imag));

  const VerificationReport eig = check_eigenvalues(fine.K, fine.s, std::sqrt(fine.sigma2));
  show(eig);
  std::vector<Level> levels;
  for (const Built& b : kernels) levels.push_back({std::sqrt(b.sigma2), &b.K, &b.s});
  const VerificationReport trend = check_eigenvalue_trend(levels);
  show(trend);
  const VerificationReport ef = check_eigenfunctions(fine.K, fine.s, 1);
  show(ef);
  const VerificationReport ht = check_hitting_times(fine.K, fine.s, 1);
  show(ht);
  show(check_gap(levels));

  const bool pass = a && eig.pass && trend.pass && ef.pass && ht.pass;
  std::ostringstream os;
  os << "(a) " << (a ? "ok" : "fail") << ", (b) " << (eig.pass && trend.pass ? "ok" : "fail") << ", (c, d) "
     << (ef.pass ? "ok" : "fail") << ", (e) " << (ht.pass ? "ok" : "fail");
  verdict(3, "reference-model theorem suite", pass, os.str());
}

void criterion_exponent(const std::vector<Built>& kernels) {
  std::vector<std::pair<double, double>> points;
  for (const Built& b : kernels) points.emplace_back(std::sqrt(b.sigma2), escape_probability(b.K, b.s, 1));
  const ExponentFit fit = estimate_exponent(points);
  const double truth = 0.0395833;
  const double err = std::abs(fit.H - truth) / truth;
  verdict(4, "exponent regression", err <= 0.15,
          "H = " + fmt(fit.H) + " (r^2 " + fmt(fit.r2) + ") vs 0.0395833, relative error " + fmt(err) +
              " (limit 0.15)");
}

void criterion_floquet() {
  const auto t0 = Clock::now();
  const SdeModel m = reference_model(1.0, 0.1);
  bool ok = true;
  std::ostringstream os;
  for (double r : {1.0, 2.2}) {
    const double vpp = r == 1.0 ? 0.6 : 0.84;
    State guess(1);
    guess << r + 0.05;
    const PeriodicOrbit o = find_periodic_orbit(m, guess);
    const Monodromy mono = monodromy(m, o);
    const double expected = std::exp(-vpp * o.period);
    const double err = std::abs(mono.multipliers[1].real() - expected);
    const double trivial = std::abs(mono.trivial - 1.0);
    ok = ok && std::abs(o.chart_point[0] - r) <= 1e-8 && err <= 1e-5 && trivial <= 1e-6 &&
         mono.trivial_angle <= 1e-4 && o.stable;
    os << "r* = " << fmt(o.chart_point[0]) << ": |mu - 1| = " << fmt(trivial) << ", angle " << fmt(mono.trivial_angle)
       << ", radial " << fmt(mono.multipliers[1].real()) << " vs " << fmt(expected) << "; ";
  }
  State guess(1);
  guess << 1.5;
  const PeriodicOrbit u = find_periodic_orbit(m, guess);
  const Monodromy mono = monodromy(m, u);
  ok = ok && !u.stable && std::abs(mono.multipliers[0]) > 1.0;
  os << "r* = 1.5 " << (u.stable ? "stable" : "unstable") << " (mu = " << fmt(std::abs(mono.multipliers[0])) << ")";
  const double t = seconds_since(t0);
  os << ", " << fmt(t) << " s (limit 5 s)";
  verdict(5, "Floquet suite", ok && t < 5.0, os.str());
}

void criterion_certificates(const std::vector<Built>& kernels) {
  bool ok = true;
  int count = 0;
  for (const Built& b : kernels) {
    for (const BoundCertificate& c : run_certificates(b.K, b.s, {1, 4, 16})) {
      const bool good = c.satisfied || !c.asserted;
      detail("sigma^2 " + fmt(b.sigma2) + " " + c.name + ": measured " + fmt(c.measured_value.value_or(NAN)) +
             " <= bound " + fmt(c.bound_value) + (c.satisfied ? "" : (c.asserted ? "  FAILED" : "  (report only)")));
      ok = ok && good;
      count += c.asserted;
    }
  }
  verdict(6, "bound-certificate suite", ok, std::to_string(count) + " asserted certificates over " +
                                               std::to_string(kernels.size()) + " kernels, m in {1, 4, 16}");
}

void criterion_reproducibility(const Built& reference) {
  const Built other = build(reference.sigma2, 2);
  const double a = 1.0 - sorted_eigenvalues(reference.K.matrix)[1].real();
  const double b = 1.0 - sorted_eigenvalues(other.K.matrix)[1].real();
  const double change = std::abs(b - a) / a;
  verdict(7, "statistical reproducibility", change <= 0.20,
          "1 - lambda_1 = " + fmt(a) + " (seed 1) vs " + fmt(b) + " (seed 2), relative change " + fmt(change) +
              " (limit 0.20)");
}

}  // namespace

int main() {
  std::printf("reference kernels: %d cells, %d samples per cell, dt %g, delta %g, seed %llu\n", kCells, kSamples, kDt,
              kDelta, static_cast<unsigned long long>(kSeed));
  std::vector<Built> kernels;
  try {
    for (double s2 : kSigma2) kernels.push_back(build(s2, kSeed));
  } catch (const std::exception& e) {
    std::printf("kernel construction failed: %s\n", e.what());
    return 1;
  }
  auto guarded = [](int id, const char* name, auto&& f) {
    try {
      f();
    } catch (const std::exception& e) {
      verdict(id, name, false, std::string("error: ") + e.what());
    }
  };
  guarded(1, "exact-identity suite", [&] { criterion_exact(kernels); });
  guarded(2, "block-triangularization suite", [&] { criterion_block(); });
  guarded(3, "reference-model theorem suite", [&] { criterion_theorems(kernels); });
  guarded(4, "exponent regression", [&] { criterion_exponent(kernels); });
  guarded(5, "Floquet suite", [&] { criterion_floquet(); });
  guarded(6, "bound-certificate suite", [&] { criterion_certificates(kernels); });
  guarded(7, "statistical reproducibility", [&] { criterion_reproducibility(kernels.back()); });
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

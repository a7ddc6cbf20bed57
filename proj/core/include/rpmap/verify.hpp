#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rpmap/metastable.hpp"

namespace rpmap {

/// One comparison between a direct spectral quantity and its estimate.
/// `labels[i]` names the pair (predicted[i], measured[i]).
struct VerificationReport {
  std::string check_name;
  std::vector<double> sigma_values;
  std::vector<std::string> labels;
  std::vector<double> predicted;
  std::vector<double> measured;
  std::vector<double> relative_errors;
  std::vector<std::pair<std::string, double>> tolerances;
  bool pass = false;
  std::string note;

  void add(const std::string& label, double predicted_value, double measured_value);
};

/// A kernel built at one noise level together with its structure.
struct Level {
  double sigma = 0.0;
  const DiscretizedKernel* K = nullptr;
  const MetastableStructure* structure = nullptr;
};

struct ExponentFit {
  double H = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// P_{pi_ring^{B_{k+1}}}(tau+_{M_k} < tau+_{B_{k+1}}), the quasistationary
/// escape probability from the (k+1)-th ball at level k.
double escape_probability(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k);

/// For every level k: direct 1 - lambda_k against the escape probability and
/// against 1 - lambda_0 of K killed outside M_k.
VerificationReport check_eigenvalues(const DiscretizedKernel& K, const MetastableStructure& s, double sigma,
                                     double tolerance = 0.10);
/// Worst of the two route errors of check_eigenvalues at level k along a
/// noise schedule; passes when it shrinks as sigma decreases.
VerificationReport check_eigenvalue_trend(const std::vector<Level>& levels, std::size_t k = 1);

VerificationReport check_gap(const std::vector<Level>& levels);

VerificationReport check_eigenfunctions(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k,
                                        double right_tolerance = 0.05, double left_tolerance = 0.10);

VerificationReport check_hitting_times(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k,
                                       double tolerance = 0.10, double oscillation_tolerance = 0.05);

/// Least squares of log p against -1/sigma^2. Throws DegenerateFit.
ExponentFit estimate_exponent(const std::vector<std::pair<double, double>>& points);

/// P_{pi_ring^{B_i}}(tau+_{B_j} < tau+_{B_i}) with balls in catalog
/// numbering; pi_ring^{B_i} is the QSD of the trace on all balls killed
/// outside B_i.
double transition_probability(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t i,
                              std::size_t j);
/// H(i, j) fitted from transition_probability over the levels (catalog
/// numbering, infinite diagonal).
Eigen::MatrixXd regress_exponents(const std::vector<Level>& levels);

/// Identities that hold to solver precision on any kernel: committor
/// detailed balance, Doob spectrum, geometric exit law, trace row sums,
/// u = 0 Laplace kernel, the left-eigenfunction Laplace identity and
/// Feynman-Kac consistency. `sets` are disjoint probe sets (balls for built
/// kernels); `eigen_count` is the number of top eigenpairs used.
std::vector<VerificationReport> run_exact_suite(const DiscretizedKernel& K, const std::vector<CellSet>& sets,
                                                std::size_t eigen_count, std::uint64_t seed = 1);

/// Certificates on one kernel with its structure: spectral gap and
/// oscillation per trace-killed ball, norm bounds for each iterate m, the
/// P-matrix eigenvalue bounds and the resolvent contour.
std::vector<BoundCertificate> run_certificates(const DiscretizedKernel& K, const MetastableStructure& s,
                                               const std::vector<int>& iterates);

}  // namespace rpmap

#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rpmap/markov.hpp"

namespace rpmap {

/// Balls around the stable orbits. `balls`, `centers` and `H` use the
/// original (catalog) numbering; `order[i]` is the original index of the
/// (i+1)-th orbit in metastable order, so ordered_ball(0) is the deepest.
struct MetastableStructure {
  std::vector<CellSet> balls;
  std::vector<State> centers;
  double delta = 0.0;
  std::vector<std::size_t> order;
  Eigen::MatrixXd H;
  double theta = 0.0;
  std::string h_provenance;

  std::size_t size() const { return balls.size(); }
  const CellSet& ordered_ball(std::size_t i) const { return balls[order[i]]; }
  const State& ordered_center(std::size_t i) const { return centers[order[i]]; }
  /// Union of the first k balls in metastable order.
  CellSet union_first(std::size_t k) const;
  /// Union of the first k balls with the i-th (ordered) removed.
  CellSet union_first_without(std::size_t k, std::size_t i) const;
};

struct HierarchyResult {
  std::vector<std::size_t> order;
  double theta = 0.0;
};

struct BlockTriangularization {
  Eigen::VectorXd S12;
  Eigen::MatrixXd T11;
  Eigen::RowVectorXd T21;
  double alpha = 0.0;
  int iterations = 0;
  double residual = 0.0;  // || Phat S - S T ||_inf
  double b = 0.0;         // largest off-diagonal row mass of the first k rows
  double a_hat = 0.0;
  bool contraction_ok = false;  // b / a_hat < 1/8
};

struct BoundCertificate {
  std::string name;
  std::vector<std::pair<std::string, double>> inputs;
  double bound_value = 0.0;
  std::optional<double> measured_value;
  bool satisfied = false;
  bool asserted = true;  // false: reported only, never fails a run
};

struct PMatrix {
  Eigen::MatrixXd P;
  std::vector<QsdResult> qsds;  // per ordered ball, on the trace-killed kernels
};

struct KStarSpectrum {
  std::vector<std::complex<double>> eigenvalues;
  BlockTriangularization triangularization;
  std::vector<BoundCertificate> bounds;
};

struct LeftEstimate {
  Eigen::VectorXd committor_masses;   // per ordered ball j = 0..N-1
  Eigen::VectorXd triangular_masses;  // per ordered ball j = 0..k, from the block triangularization
};

/// Balls of radius delta (chart distance) around the given centers. Checks
/// that balls are disjoint and that the noise-free return map sends each
/// ball strictly into itself. Order is left as the identity.
MetastableStructure detect_balls(const DiscretizedKernel& K, const SdeModel& model,
                                 const std::vector<State>& centers, double delta, double dt = 1e-3);
/// Uses the model's catalog of stable orbits.
MetastableStructure detect_balls(const DiscretizedKernel& K, const SdeModel& model, double delta,
                                 double dt = 1e-3);

HierarchyResult hierarchy_order(const Eigen::MatrixXd& H);
/// Stores H, its provenance, the metastable order and theta.
void apply_hierarchy(MetastableStructure& s, const Eigen::MatrixXd& H, const std::string& provenance);

/// trace(K, M_{k+1}).
DiscretizedKernel level_trace(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k);

/// P_ij = sum_{x in B_i} pi_ring^{B_i}(x) K0(x, B_j) over the first k+1
/// ordered balls, K0 the trace kernel on M_{k+1}.
PMatrix build_P(const DiscretizedKernel& K0, const MetastableStructure& s, std::size_t k);

BlockTriangularization block_triangularize(const Eigen::MatrixXd& Phat, double tol = 1e-14);

KStarSpectrum kstar_spectrum(const Eigen::MatrixXd& P);

/// Rows of K* are constant across each ball of M_{k+1}.
DiscretizedKernel finite_rank_kernel(const DiscretizedKernel& K0, const MetastableStructure& s, std::size_t k,
                                     const std::vector<QsdResult>& qsds);

/// Committor-based estimate of the k-th right eigenfunction on every carried
/// state of K (1 <= k <= N-1).
Eigen::VectorXd right_eigenfunction_estimate(const DiscretizedKernel& K, const MetastableStructure& s,
                                             std::size_t k);
LeftEstimate left_eigenfunction_estimate(const DiscretizedKernel& K, const MetastableStructure& s,
                                         std::size_t k);

/// max over columns of (max_x k(x, y) / min_x k(x, y)); infinity when a
/// column minimum vanishes.
double uniform_positivity(const DiscretizedKernel& Kn);

BoundCertificate spectral_gap_bound(const DiscretizedKernel& K0_B, int n);
/// M scales the bound; the principal right eigenfunction is normalized by
/// <qsd, phi> = 1.
BoundCertificate oscillation_bound(const DiscretizedKernel& K0_B, int n, double L, double M = 1.0);

/// Laplace-kernel norm bounds and the finite-rank bound at level k
/// (default N-1), for the iterate m.
std::vector<BoundCertificate> norm_certificates(const DiscretizedKernel& K, const MetastableStructure& s,
                                                double u, int m, std::optional<std::size_t> k = {});

/// Samples |z - lambda*| = radius_fraction * a_hat and compares the measured
/// resolvent norm of P with c1 / |z - lambda*|, c1 = 9 (5/4)^2.
BoundCertificate resolvent_certificate(const Eigen::MatrixXd& P, double radius_fraction = 0.125,
                                       int samples = 64);

inline constexpr double kResolventConstant = 9.0 * 1.5625;

}  // namespace rpmap

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "rpmap/poincare.hpp"

namespace rpmap {

/// Eigenpairs ordered by decreasing modulus (ties: larger real part, then
/// larger imaginary part first). Left vectors satisfy sum_x pi_i(x) phi_j(x) =
/// delta_ij. Pair 0, when real, has pi_0 summing to one; other right vectors
/// have unit sup norm with their largest entry real and positive.
struct SpectralDecomposition {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<Eigen::VectorXcd> right_vectors;
  std::vector<Eigen::VectorXcd> left_vectors;
  std::size_t count = 0;
};

struct QsdResult {
  double lambda0 = 0.0;
  Eigen::VectorXd qsd;              // probability vector
  Eigen::VectorXd principal_right;  // <qsd, principal_right> = 1
  double residual = 0.0;            // || qsd K - lambda0 qsd ||_1
  std::size_t iterations = 0;
  bool irreducible = true;
};

SpectralDecomposition spectral_decomposition(const Eigen::MatrixXd& M, std::size_t count);
SpectralDecomposition spectral_decomposition(const DiscretizedKernel& K, std::size_t count);

/// All eigenvalues of M sorted as in SpectralDecomposition.
std::vector<std::complex<double>> sorted_eigenvalues(const Eigen::MatrixXd& M);
double spectral_radius(const Eigen::MatrixXd& M);

DiscretizedKernel kill(const DiscretizedKernel& K, const CellSet& A);
DiscretizedKernel trace(const DiscretizedKernel& K, const CellSet& A);

/// Power iteration on K_A and its transpose. Once the eigenvalue estimate
/// settles to `tol` the iteration continues while the residual still
/// improves, so the geometric exit law holds to rounding. Reducible K_A is
/// reported through QsdResult::irreducible rather than rejected.
QsdResult qsd(const DiscretizedKernel& K_A, double tol = 1e-12, std::size_t max_iterations = 1000000);

DiscretizedKernel doob_transform(const DiscretizedKernel& K_A, const QsdResult& q);

/// h(x) = P_x(tau_A < tau_B) on every carried state.
Eigen::VectorXd committor(const DiscretizedKernel& K, const CellSet& A, const CellSet& B);
/// P_x(tau+_A < tau+_B) on every carried state.
Eigen::VectorXd return_committor_vector(const DiscretizedKernel& K, const CellSet& A, const CellSet& B);
/// P_mu(tau+_A < tau+_B); mu is indexed like the kernel's states.
double return_committor(const DiscretizedKernel& K, const Eigen::VectorXd& mu, const CellSet& A,
                        const CellSet& B);

/// E_x[tau_A], zero on A.
Eigen::VectorXd expected_hitting_time(const DiscretizedKernel& K, const CellSet& A);
/// E_x[tau+_A] = 1 + sum_y k(x, y) E_y[tau_A].
Eigen::VectorXd expected_return_time(const DiscretizedKernel& K, const CellSet& A);

/// K^u on A. Throws LaplaceDivergence unless e^u rho(K_{A^c}) < 1.
DiscretizedKernel laplace_kernel(const DiscretizedKernel& K, const CellSet& A, double u);

/// phi(x) = E_x[e^{u tau_A} boundary(X_{tau_A})] on every carried state;
/// `boundary` is indexed like positions(A).
Eigen::VectorXd feynman_kac(const DiscretizedKernel& K, const CellSet& A, double u,
                            const Eigen::VectorXd& boundary);

/// Exit-time law P(tau+_{A^c} = n), n = 1..n_max, for the chain started from
/// mu on the killed kernel K_A, by vector-matrix recursion.
std::vector<double> exit_time_law(const DiscretizedKernel& K_A, const Eigen::VectorXd& mu, int n_max);

/// Max absolute row sum.
double inf_norm(const Eigen::MatrixXd& M);
double inf_norm(const Eigen::MatrixXcd& M);

/// Grid cells carried by the kernel at the given positions.
CellSet cells_at(const DiscretizedKernel& K, const std::vector<Eigen::Index>& positions);

}  // namespace rpmap

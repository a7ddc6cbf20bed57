#include "rpmap/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "rpmap/error.hpp"

namespace rpmap {

namespace {

using Index = Eigen::Index;
using Positions = std::vector<Index>;

constexpr double kRealTol = 1e-10;
constexpr double kPairTol = 1e-10;
constexpr double kSingularRcond = 1e-14;

bool eigen_order(const std::complex<double>& a, const std::complex<double>& b) {
  const double ma = std::abs(a), mb = std::abs(b);
  if (ma != mb) return ma > mb;
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

std::vector<Index> sorted_order(const Eigen::VectorXcd& values) {
  std::vector<Index> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return eigen_order(values[a], values[b]); });
  return idx;
}

Eigen::MatrixXd sub(const Eigen::MatrixXd& M, const Positions& rows, const Positions& cols) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Index>(i), static_cast<Index>(j)) = M(rows[i], cols[j]);
    }
  }
  return out;
}

Eigen::VectorXd solve_checked(const Eigen::MatrixXd& A, const Eigen::MatrixXd& rhs, ErrorCode code,
                              const char* what) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  if (!(lu.rcond() > kSingularRcond)) throw Error(code, what);
  return lu.solve(rhs);
}

// Positions of the carried cells outside every set given.
Positions rest_positions(const DiscretizedKernel& K, const Positions& a, const Positions& b) {
  std::vector<bool> used(K.size(), false);
  for (Index p : a) used[static_cast<std::size_t>(p)] = true;
  for (Index p : b) {
    if (used[static_cast<std::size_t>(p)]) throw Error(ErrorCode::InvalidArgument, "sets must be disjoint");
    used[static_cast<std::size_t>(p)] = true;
  }
  Positions out;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (!used[i]) out.push_back(static_cast<Index>(i));
  }
  return out;
}

Positions nonempty_positions(const DiscretizedKernel& K, const CellSet& A) {
  if (A.empty()) throw Error(ErrorCode::EmptySet, "cell set is empty");
  return K.positions(A);
}

DiscretizedKernel restrict_to(const DiscretizedKernel& K, const Positions& pos, Eigen::MatrixXd matrix) {
  DiscretizedKernel out;
  out.grid = K.grid;
  out.sigma = K.sigma;
  out.matrix = std::move(matrix);
  for (Index p : pos) {
    out.states.push_back(K.states[static_cast<std::size_t>(p)]);
    if (!K.sample_counts.empty()) out.sample_counts.push_back(K.sample_counts[static_cast<std::size_t>(p)]);
  }
  const Eigen::VectorXd lost =
      (Eigen::VectorXd::Ones(out.matrix.rows()) - out.matrix.rowwise().sum()).cwiseMax(0.0);
  if (K.has_kill() || (lost.size() > 0 && lost.maxCoeff() > 1e-12)) out.kill_column = lost;
  return out;
}

// K_AA + factor K_AC (I - factor K_CC)^{-1} K_CA, the excursion-summed kernel.
Eigen::MatrixXd excursion_kernel(const DiscretizedKernel& K, const Positions& a, const Positions& c,
                                 double factor, ErrorCode code) {
  Eigen::MatrixXd out = sub(K.matrix, a, a);
  if (c.empty()) return out;
  const Eigen::MatrixXd kcc = sub(K.matrix, c, c);
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(kcc.rows(), kcc.cols()) - factor * kcc;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  if (!(lu.rcond() > kSingularRcond)) throw Error(code, "I - K restricted to the complement is singular");
  out.noalias() += factor * (sub(K.matrix, a, c) * lu.solve(sub(K.matrix, c, a)));
  return out;
}

bool strongly_connected(const Eigen::MatrixXd& M) {
  const Index n = M.rows();
  auto reach = [&](bool forward) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      for (Index j = 0; j < n; ++j) {
        const double w = forward ? M(i, j) : M(j, i);
        if (w > 0.0 && !seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = true;
          stack.push_back(j);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  };
  return n == 0 || (reach(true) && reach(false));
}

}  // namespace

std::vector<std::complex<double>> sorted_eigenvalues(const Eigen::MatrixXd& M) {
  const Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "eigenvalue iteration failed");
  const Eigen::VectorXcd values = es.eigenvalues();
  std::vector<std::complex<double>> out;
  for (Index i : sorted_order(values)) out.push_back(values[i]);
  return out;
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return std::abs(sorted_eigenvalues(M).front());
}

SpectralDecomposition spectral_decomposition(const Eigen::MatrixXd& M, std::size_t count) {
  const Index n = M.rows();
  if (count > static_cast<std::size_t>(n)) throw Error(ErrorCode::InvalidArgument, "count exceeds matrix size");
  SpectralDecomposition out;
  if (count == 0) return out;

  const Eigen::EigenSolver<Eigen::MatrixXd> right(M);
  const Eigen::EigenSolver<Eigen::MatrixXd> left(M.transpose());
  if (right.info() != Eigen::Success || left.info() != Eigen::Success) {
    throw Error(ErrorCode::NoConvergence, "eigen decomposition failed");
  }
  const Eigen::VectorXcd rv = right.eigenvalues();
  const Eigen::VectorXcd lv = left.eigenvalues();
  const Eigen::MatrixXcd R = right.eigenvectors();
  const Eigen::MatrixXcd L = left.eigenvectors();
  const std::vector<Index> rorder = sorted_order(rv);
  std::vector<bool> left_used(static_cast<std::size_t>(n), false);

  auto close = [](std::complex<double> a, std::complex<double> b) {
    return std::abs(a - b) <= kPairTol * std::max(1.0, std::abs(a));
  };

  std::size_t pos = 0;
  while (out.count < count) {
    // Cluster: consecutive right eigenvalues (in sorted order) within the
    // pairing radius of the cluster head; a count that cuts a cluster is
    // extended internally and truncated afterwards.
    const std::complex<double> head = rv[rorder[pos]];
    std::vector<Index> rcluster;
    while (pos < rorder.size() && close(rv[rorder[pos]], head)) rcluster.push_back(rorder[pos++]);
    std::vector<Index> lcluster;
    for (Index j = 0; j < n; ++j) {
      if (!left_used[static_cast<std::size_t>(j)] && close(lv[j], head)) lcluster.push_back(j);
    }
    if (lcluster.size() != rcluster.size()) {
      throw Error(ErrorCode::DefectiveCluster, "left and right eigenvalues do not pair near " +
                                                   std::to_string(head.real()) + "+" +
                                                   std::to_string(head.imag()) + "i");
    }
    for (Index j : lcluster) left_used[static_cast<std::size_t>(j)] = true;
    const auto m = static_cast<Index>(rcluster.size());
    Eigen::MatrixXcd Rc(n, m), Lc(n, m);
    for (Index k = 0; k < m; ++k) {
      Eigen::VectorXcd r = R.col(rcluster[static_cast<std::size_t>(k)]);
      Index imax = 0;
      r.cwiseAbs().maxCoeff(&imax);
      r /= r[imax];
      Rc.col(k) = r;
      Lc.col(k) = L.col(lcluster[static_cast<std::size_t>(k)]).normalized();
    }
    // Biorthonormalize within the cluster: Lc <- Lc G^{-T} with G = Lc^T Rc.
    const Eigen::MatrixXcd G = Lc.transpose() * Rc;
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
    const double smin = svd.singularValues().minCoeff();
    double rscale = 0.0;
    for (Index k = 0; k < m; ++k) rscale = std::max(rscale, Rc.col(k).norm());
    if (!(smin > 1e-10 * rscale)) {
      throw Error(ErrorCode::DefectiveCluster, "eigenvalue near " + std::to_string(head.real()) +
                                                   " has a nontrivial Jordan block");
    }
    Lc = Lc * G.inverse().transpose();

    for (Index k = 0; k < m; ++k) {
      std::complex<double> value = rv[rcluster[static_cast<std::size_t>(k)]];
      Eigen::VectorXcd r = Rc.col(k);
      Eigen::VectorXcd l = Lc.col(k);
      if (std::abs(value.imag()) <= kRealTol) {
        value = {value.real(), 0.0};
        r = r.real().cast<std::complex<double>>();
        l = l.real().cast<std::complex<double>>();
      }
      if (out.count == 0 && m == 1 && value.imag() == 0.0) {
        const std::complex<double> mass = l.sum();
        if (std::abs(mass) > 1e-12) {
          l /= mass;
          r *= mass;
        }
      }
      out.eigenvalues.push_back(value);
      out.right_vectors.push_back(r);
      out.left_vectors.push_back(l);
      if (++out.count == count) break;
    }
  }
  return out;
}

SpectralDecomposition spectral_decomposition(const DiscretizedKernel& K, std::size_t count) {
  return spectral_decomposition(K.matrix, count);
}

DiscretizedKernel kill(const DiscretizedKernel& K, const CellSet& A) {
  const Positions a = nonempty_positions(K, A);
  return restrict_to(K, a, sub(K.matrix, a, a));
}

DiscretizedKernel trace(const DiscretizedKernel& K, const CellSet& A) {
  const Positions a = nonempty_positions(K, A);
  const Positions c = K.complement_positions(A);
  return restrict_to(K, a, excursion_kernel(K, a, c, 1.0, ErrorCode::NonReturning));
}

DiscretizedKernel laplace_kernel(const DiscretizedKernel& K, const CellSet& A, double u) {
  const Positions a = nonempty_positions(K, A);
  const Positions c = K.complement_positions(A);
  const double factor = std::exp(u);
  if (!c.empty() && !(factor * spectral_radius(sub(K.matrix, c, c)) < 1.0)) {
    throw Error(ErrorCode::LaplaceDivergence, "e^u times the spectral radius off A is not below one");
  }
  return restrict_to(K, a, excursion_kernel(K, a, c, factor, ErrorCode::LaplaceDivergence));
}

QsdResult qsd(const DiscretizedKernel& K_A, double tol, std::size_t max_iterations) {
  const Eigen::MatrixXd& M = K_A.matrix;
  const Index n = M.rows();
  if (n == 0) throw Error(ErrorCode::EmptySet, "empty kernel");
  const Eigen::MatrixXd Mt = M.transpose();

  QsdResult out;
  out.irreducible = strongly_connected(M);
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd phi = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd next(n);
  double lambda = -1.0, mu = -1.0;
  bool settled = false;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;

  std::size_t it = 0;
  for (; it < max_iterations; ++it) {
    next.noalias() = Mt * pi;
    const double lam = next.sum();
    if (!(lam > 0.0)) throw Error(ErrorCode::NoGap, "killed kernel loses all mass");
    const double res_left = (next - lam * pi).lpNorm<1>();
    pi = next / lam;

    next.noalias() = M * phi;
    const double m = next.cwiseAbs().maxCoeff();
    const double res_right = (next - m * phi).cwiseAbs().maxCoeff() / m;
    phi = next / m;

    const double res = std::max(res_left, res_right);
    if (!settled) {
      settled = std::abs(lam - lambda) <= tol && std::abs(m - mu) <= tol && res <= 1e-10;
      best = res;
    } else {
      // Keep polishing while the residual improves; stop at rounding level.
      if (res < best) {
        best = res;
        stale = 0;
      } else if (++stale >= 10 || res == 0.0) {
        break;
      }
    }
    lambda = lam;
    mu = m;
  }
  if (!settled) {
    throw Error(ErrorCode::NoGap, "power iteration did not converge in " + std::to_string(max_iterations) +
                                      " steps");
  }
  next.noalias() = Mt * pi;
  out.lambda0 = next.sum();
  out.residual = (next - out.lambda0 * pi).lpNorm<1>();
  out.qsd = pi;
  out.principal_right = phi / pi.dot(phi);
  out.iterations = it;
  return out;
}

DiscretizedKernel doob_transform(const DiscretizedKernel& K_A, const QsdResult& q) {
  const Eigen::VectorXd& phi = q.principal_right;
  if (phi.size() != static_cast<Index>(K_A.size())) throw Error(ErrorCode::InvalidArgument, "QSD size mismatch");
  if (!(phi.minCoeff() > 1e-14)) throw Error(ErrorCode::ZeroEigenfunction, "principal eigenfunction vanishes");
  DiscretizedKernel out = K_A;
  out.matrix = (phi.cwiseInverse() / q.lambda0).asDiagonal() * K_A.matrix * phi.asDiagonal();
  out.kill_column.resize(0);
  return out;
}

Eigen::VectorXd committor(const DiscretizedKernel& K, const CellSet& A, const CellSet& B) {
  const Positions a = nonempty_positions(K, A);
  const Positions b = nonempty_positions(K, B);
  const Positions c = rest_positions(K, a, b);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(static_cast<Index>(K.size()));
  for (Index p : a) h[p] = 1.0;
  if (c.empty()) return h;
  const Eigen::MatrixXd kcc = sub(K.matrix, c, c);
  const Eigen::VectorXd rhs = sub(K.matrix, c, a).rowwise().sum();
  const Eigen::VectorXd hc = solve_checked(Eigen::MatrixXd::Identity(kcc.rows(), kcc.cols()) - kcc, rhs,
                                           ErrorCode::SingularSystem, "committor system is singular");
  for (std::size_t i = 0; i < c.size(); ++i) h[c[i]] = hc[static_cast<Index>(i)];
  return h;
}

Eigen::VectorXd return_committor_vector(const DiscretizedKernel& K, const CellSet& A, const CellSet& B) {
  return K.matrix * committor(K, A, B);
}

double return_committor(const DiscretizedKernel& K, const Eigen::VectorXd& mu, const CellSet& A,
                        const CellSet& B) {
  if (mu.size() != static_cast<Index>(K.size())) throw Error(ErrorCode::InvalidArgument, "mu size mismatch");
  return mu.dot(return_committor_vector(K, A, B));
}

Eigen::VectorXd expected_hitting_time(const DiscretizedKernel& K, const CellSet& A) {
  nonempty_positions(K, A);
  const Positions c = K.complement_positions(A);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Index>(K.size()));
  if (c.empty()) return t;
  const Eigen::MatrixXd kcc = sub(K.matrix, c, c);
  const Eigen::VectorXd tc =
      solve_checked(Eigen::MatrixXd::Identity(kcc.rows(), kcc.cols()) - kcc, Eigen::VectorXd::Ones(kcc.rows()),
                    ErrorCode::SingularSystem, "hitting-time system is singular");
  for (std::size_t i = 0; i < c.size(); ++i) t[c[i]] = tc[static_cast<Index>(i)];
  return t;
}

Eigen::VectorXd expected_return_time(const DiscretizedKernel& K, const CellSet& A) {
  return Eigen::VectorXd::Ones(static_cast<Index>(K.size())) + K.matrix * expected_hitting_time(K, A);
}

Eigen::VectorXd feynman_kac(const DiscretizedKernel& K, const CellSet& A, double u,
                            const Eigen::VectorXd& boundary) {
  const Positions a = nonempty_positions(K, A);
  if (boundary.size() != static_cast<Index>(a.size())) {
    throw Error(ErrorCode::InvalidArgument, "boundary data size mismatch");
  }
  const Positions c = K.complement_positions(A);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(static_cast<Index>(K.size()));
  for (std::size_t i = 0; i < a.size(); ++i) phi[a[i]] = boundary[static_cast<Index>(i)];
  if (c.empty()) return phi;
  const double factor = std::exp(u);
  const Eigen::MatrixXd kcc = sub(K.matrix, c, c);
  if (!(factor * spectral_radius(kcc) < 1.0)) {
    throw Error(ErrorCode::LaplaceDivergence, "e^u times the spectral radius off A is not below one");
  }
  const Eigen::VectorXd rhs = factor * (sub(K.matrix, c, a) * boundary);
  const Eigen::VectorXd pc = solve_checked(Eigen::MatrixXd::Identity(kcc.rows(), kcc.cols()) - factor * kcc, rhs,
                                           ErrorCode::LaplaceDivergence, "Feynman-Kac system is singular");
  for (std::size_t i = 0; i < c.size(); ++i) phi[c[i]] = pc[static_cast<Index>(i)];
  return phi;
}

std::vector<double> exit_time_law(const DiscretizedKernel& K_A, const Eigen::VectorXd& mu, int n_max) {
  const Eigen::VectorXd lost = Eigen::VectorXd::Ones(K_A.matrix.rows()) - K_A.matrix.rowwise().sum();
  const Eigen::MatrixXd Mt = K_A.matrix.transpose();
  std::vector<double> law;
  Eigen::VectorXd v = mu;
  for (int k = 1; k <= n_max; ++k) {
    law.push_back(v.dot(lost));
    v = Mt * v;
  }
  return law;
}

double inf_norm(const Eigen::MatrixXd& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().rowwise().sum().maxCoeff();
}

double inf_norm(const Eigen::MatrixXcd& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().rowwise().sum().maxCoeff();
}

CellSet cells_at(const DiscretizedKernel& K, const std::vector<Eigen::Index>& positions) {
  CellSet out;
  for (Index p : positions) out.push_back(K.states[static_cast<std::size_t>(p)]);
  return out;
}

}  // namespace rpmap

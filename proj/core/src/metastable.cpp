#include "rpmap/metastable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rpmap/error.hpp"

namespace rpmap {

namespace {

using Index = Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTieTol = 1e-12;

CellSet merged(std::vector<const CellSet*> sets) {
  CellSet out;
  for (const CellSet* s : sets) out.insert(out.end(), s->begin(), s->end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Embeds a vector given on the cells of `sub` into the states of K.
Eigen::VectorXd embed(const DiscretizedKernel& K, const DiscretizedKernel& sub, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(K.size()));
  const std::vector<Index> pos = K.positions(sub.states);
  for (std::size_t i = 0; i < pos.size(); ++i) out[pos[i]] = v[static_cast<Index>(i)];
  return out;
}

double row_mass(const DiscretizedKernel& K, Index row, const std::vector<Index>& cols) {
  double m = 0.0;
  for (Index c : cols) m += K.matrix(row, c);
  return m;
}

// Second eigenvalue modulus of a killed kernel (zero for a single state).
double second_modulus(const Eigen::MatrixXd& M) {
  if (M.rows() < 2) return 0.0;
  return std::abs(sorted_eigenvalues(M)[1]);
}

}  // namespace

CellSet MetastableStructure::union_first(std::size_t k) const {
  std::vector<const CellSet*> sets;
  for (std::size_t i = 0; i < k; ++i) sets.push_back(&ordered_ball(i));
  return merged(sets);
}

CellSet MetastableStructure::union_first_without(std::size_t k, std::size_t skip) const {
  std::vector<const CellSet*> sets;
  for (std::size_t i = 0; i < k; ++i) {
    if (i != skip) sets.push_back(&ordered_ball(i));
  }
  return merged(sets);
}

MetastableStructure detect_balls(const DiscretizedKernel& K, const SdeModel& model,
                                 const std::vector<State>& centers, double delta, double dt) {
  if (centers.empty()) throw Error(ErrorCode::InvalidArgument, "no orbit centers given");
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidArgument, "ball radius must be positive");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      if ((centers[i] - centers[j]).norm() <= 2.0 * delta) {
        throw Error(ErrorCode::BallOverlap, "balls " + std::to_string(i) + " and " + std::to_string(j) + " overlap");
      }
    }
  }
  MetastableStructure s;
  s.centers = centers;
  s.delta = delta;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    CellSet ball;
    for (std::size_t cell : K.states) {
      if ((K.grid.center(cell) - centers[i]).norm() <= delta) ball.push_back(cell);
    }
    if (ball.empty()) throw Error(ErrorCode::InvalidArgument, "ball " + std::to_string(i) + " contains no cell");
    s.balls.push_back(std::move(ball));
    s.order.push_back(i);
  }

  // Boundary samples: +-delta along each axis and along the main diagonals.
  const int d = static_cast<int>(centers.front().size());
  std::vector<State> directions;
  for (int a = 0; a < d; ++a) {
    State e = State::Zero(d);
    e[a] = 1.0;
    directions.push_back(e);
    directions.push_back(-e);
  }
  if (d > 1) {
    directions.push_back(State::Ones(d).normalized());
    directions.push_back(-State::Ones(d).normalized());
  }
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (const State& e : directions) {
      const State x = centers[i] + delta * e;
      State image;
      try {
        image = deterministic_return(model, x, dt, 1e3);
      } catch (const Error& err) {
        throw Error(ErrorCode::NotInvariant, "ball " + std::to_string(i) + ": " + err.what());
      }
      if (!((image - centers[i]).norm() < delta)) {
        throw Error(ErrorCode::NotInvariant, "return map does not send ball " + std::to_string(i) + " into itself");
      }
    }
  }
  s.H = Eigen::MatrixXd::Constant(static_cast<Index>(centers.size()), static_cast<Index>(centers.size()), kInf);
  s.theta = centers.size() == 1 ? kInf : 0.0;
  return s;
}

MetastableStructure detect_balls(const DiscretizedKernel& K, const SdeModel& model, double delta, double dt) {
  if (model.stable_orbits.empty()) throw Error(ErrorCode::InvalidArgument, "model has no catalog orbits");
  return detect_balls(K, model, model.stable_orbits, delta, dt);
}

HierarchyResult hierarchy_order(const Eigen::MatrixXd& H) {
  const Index n = H.rows();
  if (H.cols() != n || n == 0) throw Error(ErrorCode::InvalidArgument, "H must be square and nonempty");
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i != j && !(std::isfinite(H(i, j)) && H(i, j) >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "off-diagonal exponents must be finite and nonnegative");
      }
    }
  }
  HierarchyResult out;
  out.order.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::size_t> remaining(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  while (remaining.size() > 1) {
    std::vector<double> escape;
    for (std::size_t i : remaining) {
      double m = kInf;
      for (std::size_t j : remaining) {
        if (j != i) m = std::min(m, H(static_cast<Index>(i), static_cast<Index>(j)));
      }
      escape.push_back(m);
    }
    const auto best = std::min_element(escape.begin(), escape.end());
    const auto ties = std::count_if(escape.begin(), escape.end(), [&](double e) { return e <= *best + kTieTol; });
    if (ties > 1) throw Error(ErrorCode::AmbiguousHierarchy, "escape exponents tie");
    const auto at = static_cast<std::size_t>(best - escape.begin());
    out.order[remaining.size() - 1] = remaining[at];
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(at));
  }
  out.order[0] = remaining.front();

  auto h = [&](std::size_t a, std::size_t b) {
    return H(static_cast<Index>(out.order[a]), static_cast<Index>(out.order[b]));
  };
  out.theta = kInf;
  for (std::size_t j = 1; j < out.order.size(); ++j) {
    double lhs = kInf;
    for (std::size_t i = 0; i < j; ++i) lhs = std::min(lhs, h(j, i));
    double rhs = kInf;
    for (std::size_t i = 0; i < j; ++i) {
      for (std::size_t l = 0; l <= j; ++l) {
        if (l != i) rhs = std::min(rhs, h(i, l));
      }
    }
    out.theta = std::min(out.theta, rhs - lhs);
  }
  if (!(out.theta > 0.0)) throw Error(ErrorCode::AmbiguousHierarchy, "hierarchy margin is not positive");
  return out;
}

void apply_hierarchy(MetastableStructure& s, const Eigen::MatrixXd& H, const std::string& provenance) {
  if (H.rows() != static_cast<Index>(s.size())) throw Error(ErrorCode::InvalidArgument, "H size mismatch");
  const HierarchyResult r = hierarchy_order(H);
  s.H = H;
  s.order = r.order;
  s.theta = r.theta;
  s.h_provenance = provenance;
}

DiscretizedKernel level_trace(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k) {
  return trace(K, s.union_first(k + 1));
}

PMatrix build_P(const DiscretizedKernel& K0, const MetastableStructure& s, std::size_t k) {
  if (k + 1 > s.size()) throw Error(ErrorCode::InvalidArgument, "level exceeds number of balls");
  const auto m = static_cast<Index>(k + 1);
  PMatrix out;
  out.P = Eigen::MatrixXd::Zero(m, m);
  std::vector<std::vector<Index>> cols;
  for (std::size_t j = 0; j <= k; ++j) cols.push_back(K0.positions(s.ordered_ball(j)));
  for (std::size_t i = 0; i <= k; ++i) {
    const QsdResult q = qsd(kill(K0, s.ordered_ball(i)));
    for (std::size_t j = 0; j <= k; ++j) {
      double p = 0.0;
      for (std::size_t x = 0; x < cols[i].size(); ++x) p += q.qsd[static_cast<Index>(x)] * row_mass(K0, cols[i][x], cols[j]);
      out.P(static_cast<Index>(i), static_cast<Index>(j)) = p;
    }
    out.qsds.push_back(q);
  }
  return out;
}

BlockTriangularization block_triangularize(const Eigen::MatrixXd& Phat, double tol) {
  const Index m = Phat.rows();
  if (Phat.cols() != m || m < 1) throw Error(ErrorCode::InvalidArgument, "Phat must be square");
  const Index k = m - 1;
  BlockTriangularization out;
  out.a_hat = Phat(k, k);
  const Eigen::MatrixXd P11 = Phat.topLeftCorner(k, k);
  const Eigen::VectorXd P12 = Phat.topRightCorner(k, 1);
  const Eigen::RowVectorXd P21 = Phat.bottomLeftCorner(1, k);
  for (Index l = 0; l < k; ++l) {
    out.b = std::max(out.b, Phat.row(l).cwiseAbs().sum() - std::abs(Phat(l, l)));
  }
  const double p12 = k > 0 ? P12.cwiseAbs().maxCoeff() : 0.0;
  // Without forcing, S12 = 0 solves the fixed-point equation whatever a_hat.
  const bool unforced = p12 == 0.0;
  if (out.a_hat == 0.0 && !unforced) throw Error(ErrorCode::InvalidArgument, "last diagonal entry of Phat vanishes");
  const double ratio = out.a_hat != 0.0 ? out.b / std::abs(out.a_hat) : (out.b == 0.0 ? 0.0 : kInf);
  out.contraction_ok = ratio < 0.125;
  if (ratio > 0.5 && !unforced) throw Error(ErrorCode::NoContraction, "b / a_hat exceeds one half");

  const double cap = unforced ? 0.0 : 2.0 * p12 / std::abs(out.a_hat) * (1.0 + tol);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(k);
  int outside = 0;
  bool converged = k == 0 || unforced;
  for (int it = 1; it <= 100000 && !converged; ++it) {
    const double coupling = k > 0 ? P21.dot(xi) : 0.0;
    const Eigen::VectorXd next = (P12 + P11 * xi - xi * coupling) / out.a_hat;
    const double step = (next - xi).cwiseAbs().maxCoeff();
    xi = next;
    out.iterations = it;
    if (!std::isfinite(step)) break;
    outside = xi.cwiseAbs().maxCoeff() > cap ? outside + 1 : 0;
    if (outside >= 20) break;
    converged = step <= tol;
  }
  if (!converged) throw Error(ErrorCode::NoContraction, "fixed-point iteration does not contract");
  out.S12 = xi;
  out.T11 = P11 - xi * P21;
  out.T21 = P21;
  out.alpha = out.a_hat + (k > 0 ? P21.dot(xi) : 0.0);

  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(m, m);
  S.topRightCorner(k, 1) = xi;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  T.topLeftCorner(k, k) = out.T11;
  T.bottomLeftCorner(1, k) = out.T21;
  T(k, k) = out.alpha;
  out.residual = inf_norm(Eigen::MatrixXd(Phat * S - S * T));
  return out;
}

KStarSpectrum kstar_spectrum(const Eigen::MatrixXd& P) {
  const Index m = P.rows();
  const Eigen::MatrixXd Phat = Eigen::MatrixXd::Identity(m, m) - P;
  KStarSpectrum out;
  out.triangularization = block_triangularize(Phat);
  const BlockTriangularization& bt = out.triangularization;
  out.eigenvalues = sorted_eigenvalues(P);

  const double target = 1.0 - bt.alpha;
  std::size_t at = 0;
  for (std::size_t i = 1; i < out.eigenvalues.size(); ++i) {
    if (std::abs(out.eigenvalues[i] - target) < std::abs(out.eigenvalues[at] - target)) at = i;
  }
  const std::complex<double> lambda_k = out.eigenvalues[at];
  const Index k = m - 1;
  const double p12 = k > 0 ? Phat.topRightCorner(k, 1).cwiseAbs().maxCoeff() : 0.0;
  double others = 0.0;
  for (std::size_t i = 0; i < out.eigenvalues.size(); ++i) {
    if (i != at) others = std::max(others, std::abs(1.0 - out.eigenvalues[i]));
  }
  const double t11 = inf_norm(bt.T11);

  BoundCertificate consistency;
  consistency.name = "lambda_k equals 1 - alpha";
  consistency.inputs = {{"alpha", bt.alpha}, {"lambda_k", lambda_k.real()}};
  consistency.bound_value = 1e-10;
  consistency.measured_value = std::abs(lambda_k - target);
  consistency.satisfied = *consistency.measured_value <= consistency.bound_value && lambda_k.imag() == 0.0;
  out.bounds.push_back(consistency);

  BoundCertificate smallest;
  smallest.name = "|lambda_k - (1 - a_hat)| <= 2 |Phat12|";
  smallest.inputs = {{"a_hat", bt.a_hat}, {"Phat12", p12}};
  smallest.bound_value = 2.0 * p12;
  smallest.measured_value = std::abs(lambda_k - (1.0 - bt.a_hat));
  smallest.satisfied = *smallest.measured_value <= smallest.bound_value * (1.0 + 1e-12) + 1e-15;
  out.bounds.push_back(smallest);

  BoundCertificate rest;
  rest.name = "|1 - lambda_i| <= |T11| <= 4 b";
  rest.inputs = {{"T11", t11}, {"b", bt.b}, {"Phat12", p12}};
  rest.bound_value = 4.0 * bt.b;
  rest.measured_value = others;
  rest.satisfied = others <= t11 * (1.0 + 1e-12) + 1e-15 && t11 <= rest.bound_value * (1.0 + 1e-12) + 1e-15;
  out.bounds.push_back(rest);

  // Stated in terms of |Phat12| this inequality needs the first k rows to
  // leak mostly into the last ball; it is reported, not relied upon.
  BoundCertificate strict;
  strict.name = "|1 - lambda_i| <= 4 |Phat12|";
  strict.inputs = {{"Phat12", p12}};
  strict.bound_value = 4.0 * p12;
  strict.measured_value = others;
  strict.satisfied = others <= strict.bound_value * (1.0 + 1e-12) + 1e-15;
  strict.asserted = false;
  out.bounds.push_back(strict);

  BoundCertificate apriori;
  apriori.name = "|S12| <= 2 |Phat12| / a_hat";
  apriori.inputs = {{"Phat12", p12}, {"a_hat", bt.a_hat}};
  apriori.bound_value = p12 == 0.0 ? 0.0 : 2.0 * p12 / std::abs(bt.a_hat);
  apriori.measured_value = k > 0 ? bt.S12.cwiseAbs().maxCoeff() : 0.0;
  apriori.satisfied = *apriori.measured_value <= apriori.bound_value * (1.0 + 1e-12) + 1e-15;
  out.bounds.push_back(apriori);
  return out;
}

DiscretizedKernel finite_rank_kernel(const DiscretizedKernel& K0, const MetastableStructure& s, std::size_t k,
                                     const std::vector<QsdResult>& qsds) {
  if (qsds.size() != k + 1) throw Error(ErrorCode::InvalidArgument, "one QSD per ball required");
  DiscretizedKernel out = K0;
  out.matrix.setZero();
  for (std::size_t i = 0; i <= k; ++i) {
    const std::vector<Index> ball = K0.positions(s.ordered_ball(i));
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(K0.matrix.cols());
    for (std::size_t x = 0; x < ball.size(); ++x) row += qsds[i].qsd[static_cast<Index>(x)] * K0.matrix.row(ball[x]);
    for (Index x : ball) out.matrix.row(x) = row;
  }
  if (out.has_kill()) {
    out.kill_column = (Eigen::VectorXd::Ones(out.matrix.rows()) - out.matrix.rowwise().sum()).cwiseMax(0.0);
  }
  return out;
}

Eigen::VectorXd right_eigenfunction_estimate(const DiscretizedKernel& K, const MetastableStructure& s,
                                             std::size_t k) {
  if (k < 1 || k >= s.size()) throw Error(ErrorCode::InvalidArgument, "level must lie in 1..N-1");
  const CellSet& target = s.ordered_ball(k);
  const CellSet Mk = s.union_first(k);
  const DiscretizedKernel K0 = level_trace(K, s, k);
  const QsdResult qt = qsd(kill(K0, target));
  const double escape = return_committor(K, embed(K, kill(K0, target), qt.qsd), Mk, target);

  Eigen::VectorXd phi = committor(K, target, Mk);
  for (std::size_t i = 0; i < k; ++i) {
    const CellSet& ball = s.ordered_ball(i);
    const DiscretizedKernel Ki = kill(K0, ball);
    const QsdResult qi = qsd(Ki);
    const double rho = -return_committor(K, embed(K, Ki, qi.qsd), target, Mk) / escape;
    phi += rho * committor(K, ball, s.union_first_without(k + 1, i));
  }
  return phi;
}

LeftEstimate left_eigenfunction_estimate(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k) {
  if (k < 1 || k >= s.size()) throw Error(ErrorCode::InvalidArgument, "level must lie in 1..N-1");
  const std::size_t n = s.size();
  const CellSet& target = s.ordered_ball(k);
  const CellSet Mk = s.union_first(k);
  const DiscretizedKernel K0 = level_trace(K, s, k);
  const DiscretizedKernel Kt = kill(K0, target);
  const Eigen::VectorXd mu = embed(K, Kt, qsd(Kt).qsd);
  const double escape = return_committor(K, mu, Mk, target);

  LeftEstimate out;
  out.committor_masses = Eigen::VectorXd::Zero(static_cast<Index>(n));
  for (std::size_t j = 0; j < k; ++j) {
    out.committor_masses[static_cast<Index>(j)] =
        -return_committor(K, mu, s.ordered_ball(j), s.union_first_without(k + 1, j)) / escape;
  }
  const CellSet outside = cells_at(K, K.complement_positions(Mk));
  const DiscretizedKernel Kc = kill(K, outside);
  const Eigen::VectorXd qc = embed(K, Kc, qsd(Kc).qsd);
  for (std::size_t j = k; j < n; ++j) {
    double mass = 0.0;
    for (Index p : K.positions(s.ordered_ball(j))) mass += qc[p];
    out.committor_masses[static_cast<Index>(j)] = mass;
  }

  const PMatrix pm = build_P(K0, s, k);
  const auto m = static_cast<Index>(k + 1);
  const BlockTriangularization bt = block_triangularize(Eigen::MatrixXd::Identity(m, m) - pm.P);
  const Eigen::MatrixXd shifted = bt.alpha * Eigen::MatrixXd::Identity(m - 1, m - 1) - bt.T11;
  const Eigen::RowVectorXd pihat = shifted.transpose().partialPivLu().solve(bt.T21.transpose()).transpose();
  out.triangular_masses.resize(m);
  out.triangular_masses.head(m - 1) = pihat.transpose();
  out.triangular_masses[m - 1] = 1.0 - pihat.dot(bt.S12);
  return out;
}

double uniform_positivity(const DiscretizedKernel& Kn) {
  double L = 1.0;
  for (Index j = 0; j < Kn.matrix.cols(); ++j) {
    const double lo = Kn.matrix.col(j).minCoeff();
    if (!(lo > 0.0)) return kInf;
    L = std::max(L, Kn.matrix.col(j).maxCoeff() / lo);
  }
  return L;
}

BoundCertificate spectral_gap_bound(const DiscretizedKernel& K0_B, int n) {
  const QsdResult q = qsd(K0_B);
  const DiscretizedKernel Kn = iterate_kernel(K0_B, n);
  const double L = uniform_positivity(Kn);
  const double survival = Kn.matrix.rowwise().sum().minCoeff() / std::pow(q.lambda0, n);
  const double bound_n = std::max(0.0, L - survival);
  BoundCertificate c;
  c.name = "spectral gap";
  c.inputs = {{"n", n}, {"L", L}, {"survival_ratio", survival}, {"lambda0", q.lambda0}, {"theta_pow_n_bound", bound_n}};
  c.bound_value = std::pow(bound_n, 1.0 / n);
  c.measured_value = second_modulus(K0_B.matrix) / q.lambda0;
  c.satisfied = *c.measured_value <= c.bound_value + 1e-12;
  return c;
}

BoundCertificate oscillation_bound(const DiscretizedKernel& K0_B, int n, double L, double M) {
  const QsdResult q = qsd(K0_B);
  const DiscretizedKernel Kn = iterate_kernel(K0_B, n);
  const double scale = std::pow(q.lambda0, n);
  const double sup = (Eigen::VectorXd::Ones(Kn.matrix.rows()) - Kn.matrix.rowwise().sum() / scale).cwiseAbs().maxCoeff();
  BoundCertificate c;
  c.name = "principal eigenfunction oscillation";
  c.inputs = {{"n", n}, {"L", L}, {"M", M}, {"survival_oscillation", sup}};
  c.bound_value = M * L * L * sup;
  c.measured_value = (q.principal_right - Eigen::VectorXd::Ones(q.principal_right.size())).cwiseAbs().maxCoeff();
  c.satisfied = *c.measured_value <= c.bound_value + 1e-12;
  c.asserted = false;
  return c;
}

std::vector<BoundCertificate> norm_certificates(const DiscretizedKernel& K, const MetastableStructure& s, double u,
                                                int m, std::optional<std::size_t> level) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "iterate must be positive");
  const std::size_t k = level.value_or(s.size() - 1);
  if (k >= s.size()) throw Error(ErrorCode::InvalidArgument, "level exceeds number of balls");
  const CellSet M = s.union_first(k + 1);

  const Eigen::VectorXd hit = expected_hitting_time(K, M);
  const Eigen::VectorXd ret = expected_return_time(K, M);
  double e1 = 0.0, e2 = 0.0;
  for (Index p : K.positions(M)) e1 = std::max(e1, ret[p] - 1.0);
  for (Index p : K.complement_positions(M)) e2 = std::max(e2, hit[p]);
  const double q = std::abs(1.0 - std::exp(-u));
  if (!(q * e2 < 1.0)) throw Error(ErrorCode::LaplaceDivergence, "(1 - e^-u) E[tau+] reaches one off M");

  const DiscretizedKernel K0 = trace(K, M);
  const DiscretizedKernel Ku = laplace_kernel(K, M, u);
  const double b1 = q * e1 / (1.0 - q * e2);

  std::vector<BoundCertificate> out;
  BoundCertificate c1;
  c1.name = "laplace kernel vs trace";
  c1.inputs = {{"u", u}, {"E_M[tau+ - 1]", e1}, {"E_Mc[tau+]", e2}};
  c1.bound_value = b1;
  c1.measured_value = inf_norm(Eigen::MatrixXd(Ku.matrix - K0.matrix));
  c1.satisfied = *c1.measured_value <= c1.bound_value * (1.0 + 1e-12) + 1e-14;
  out.push_back(c1);

  const Eigen::MatrixXd K0m = iterate_kernel(K0, m).matrix;
  BoundCertificate c2;
  c2.name = "iterated laplace kernel vs trace";
  c2.inputs = {{"u", u}, {"m", m}, {"single_step_bound", b1}};
  c2.bound_value = std::pow(1.0 + b1, m) - 1.0;
  c2.measured_value = inf_norm(Eigen::MatrixXd(iterate_kernel(Ku, m).matrix - K0m));
  c2.satisfied = *c2.measured_value <= c2.bound_value * (1.0 + 1e-12) + 1e-14;
  out.push_back(c2);

  const PMatrix pm = build_P(K0, s, k);
  const DiscretizedKernel Kstar = finite_rank_kernel(K0, s, k, pm.qsds);
  double R = 0.0;
  BoundCertificate c3;
  c3.name = "trace vs finite rank";
  c3.inputs = {{"m", m}};
  for (std::size_t i = 0; i <= k; ++i) {
    const std::vector<Index> ball = K0.positions(s.ordered_ball(i));
    const std::vector<Index> rest = K0.complement_positions(s.ordered_ball(i));
    const DiscretizedKernel Ki = kill(K0, s.ordered_ball(i));
    const double l1 = second_modulus(Ki.matrix);
    const double osc =
        (pm.qsds[i].principal_right - Eigen::VectorXd::Ones(static_cast<Index>(ball.size()))).cwiseAbs().maxCoeff();
    double p_out = 0.0, p_in = 0.0;
    for (Index x : ball) p_out = std::max(p_out, row_mass(K0, x, rest));
    for (Index x : rest) p_in = std::max(p_in, row_mass(K0, x, ball));
    const double l1m = std::pow(l1, m);
    const double geometric = l1 < 1.0 ? (1.0 - l1m) / (1.0 - l1) : static_cast<double>(m);
    const double Ri = osc + 2.0 * l1m + 2.0 * geometric * p_out + m * (m - 1.0) * p_out * p_in;
    const std::string tag = "ball" + std::to_string(i + 1);
    c3.inputs.push_back({tag + ".oscillation", osc});
    c3.inputs.push_back({tag + ".lambda1", l1});
    c3.inputs.push_back({tag + ".p_out", p_out});
    c3.inputs.push_back({tag + ".p_in", p_in});
    c3.inputs.push_back({tag + ".R", Ri});
    R = std::max(R, Ri);
  }
  c3.bound_value = R;
  c3.measured_value = inf_norm(Eigen::MatrixXd(K0m - iterate_kernel(Kstar, m).matrix));
  c3.satisfied = *c3.measured_value <= c3.bound_value;
  out.push_back(c3);
  return out;
}

BoundCertificate resolvent_certificate(const Eigen::MatrixXd& P, double radius_fraction, int samples) {
  const Index m = P.rows();
  const BlockTriangularization bt = block_triangularize(Eigen::MatrixXd::Identity(m, m) - P);
  const double lambda_star = 1.0 - bt.alpha;
  const double r = radius_fraction * bt.a_hat;
  double worst = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double angle = 2.0 * std::numbers::pi * j / samples;
    const std::complex<double> z = lambda_star + r * std::polar(1.0, angle);
    const Eigen::MatrixXcd A = z * Eigen::MatrixXcd::Identity(m, m) - P.cast<std::complex<double>>();
    worst = std::max(worst, inf_norm(Eigen::MatrixXcd(A.inverse())));
  }
  BoundCertificate c;
  c.name = "resolvent on the contour";
  c.inputs = {{"lambda_star", lambda_star}, {"a_hat", bt.a_hat}, {"radius", r}, {"c1", kResolventConstant}};
  c.bound_value = kResolventConstant / r;
  c.measured_value = worst;
  c.satisfied = worst <= c.bound_value;
  return c;
}

}  // namespace rpmap

#include "rpmap/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "rpmap/error.hpp"

namespace rpmap {

namespace {

using Index = Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

double rel(double predicted, double measured) {
  const double scale = std::abs(measured);
  return scale > 0.0 ? std::abs(predicted - measured) / scale : std::abs(predicted - measured);
}

Eigen::VectorXd embed(const DiscretizedKernel& K, const DiscretizedKernel& sub, const Eigen::VectorXd& v) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(K.size()));
  const std::vector<Index> pos = K.positions(sub.states);
  for (std::size_t i = 0; i < pos.size(); ++i) out[pos[i]] = v[static_cast<Index>(i)];
  return out;
}

double mass(const Eigen::VectorXd& v, const std::vector<Index>& pos) {
  double m = 0.0;
  for (Index p : pos) m += v[p];
  return m;
}

CellSet merged(const std::vector<CellSet>& sets) {
  CellSet out;
  for (const CellSet& s : sets) out.insert(out.end(), s.begin(), s.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Grid multi-index of a cell, first axis slowest.
std::vector<int> multi_index(const Grid& g, std::size_t cell) {
  std::vector<int> idx(g.counts.size());
  for (std::size_t a = g.counts.size(); a-- > 0;) {
    idx[a] = static_cast<int>(cell % static_cast<std::size_t>(g.counts[a]));
    cell /= static_cast<std::size_t>(g.counts[a]);
  }
  return idx;
}

// Cells whose centers lie at least delta from every ball boundary and at
// least two cells from the grid boundary.
std::vector<Index> interior_positions(const DiscretizedKernel& K, const MetastableStructure& s) {
  std::vector<Index> out;
  for (std::size_t p = 0; p < K.size(); ++p) {
    const std::size_t cell = K.states[p];
    const std::vector<int> idx = multi_index(K.grid, cell);
    bool ok = true;
    for (std::size_t a = 0; a < idx.size() && ok; ++a) {
      ok = idx[a] >= 2 && idx[a] < K.grid.counts[a] - 2;
    }
    const State c = K.grid.center(cell);
    for (const State& x : s.centers) {
      if (!ok) break;
      ok = std::abs((c - x).norm() - s.delta) >= s.delta;
    }
    if (ok) out.push_back(static_cast<Index>(p));
  }
  return out;
}

VerificationReport eigenvalue_routes(const DiscretizedKernel& K, const MetastableStructure& s,
                                     std::vector<double>* direct, std::vector<double>* committor_route,
                                     std::vector<double>* killed_route) {
  VerificationReport r;
  const std::size_t n = s.size();
  const std::vector<std::complex<double>> ev = sorted_eigenvalues(K.matrix);
  double worst_imag = 0.0;
  bool positive = true;
  for (std::size_t i = 0; i < n && i < ev.size(); ++i) {
    worst_imag = std::max(worst_imag, std::abs(ev[i].imag()));
    positive = positive && ev[i].real() > 0.0;
  }
  r.add("max |Im lambda_i|, i < N", 0.0, worst_imag);
  r.relative_errors.back() = worst_imag;
  r.pass = worst_imag <= 1e-8 && positive && ev.size() >= n;
  for (std::size_t k = 1; k < n; ++k) {
    const double a = 1.0 - ev[k].real();
    const double b = escape_probability(K, s, k);
    const CellSet outside = cells_at(K, K.complement_positions(s.union_first(k)));
    const double c = 1.0 - qsd(kill(K, outside)).lambda0;
    direct->push_back(a);
    committor_route->push_back(b);
    killed_route->push_back(c);
  }
  return r;
}

bool decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[i - 1]) return false;
  }
  return true;
}

}  // namespace

void VerificationReport::add(const std::string& label, double predicted_value, double measured_value) {
  labels.push_back(label);
  predicted.push_back(predicted_value);
  measured.push_back(measured_value);
  relative_errors.push_back(rel(predicted_value, measured_value));
}

double escape_probability(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k) {
  if (k < 1 || k >= s.size()) throw Error(ErrorCode::InvalidArgument, "level must lie in 1..N-1");
  const CellSet& target = s.ordered_ball(k);
  const DiscretizedKernel Kt = kill(level_trace(K, s, k), target);
  return return_committor(K, embed(K, Kt, qsd(Kt).qsd), s.union_first(k), target);
}

VerificationReport check_eigenvalues(const DiscretizedKernel& K, const MetastableStructure& s, double sigma,
                                     double tolerance) {
  std::vector<double> a, b, c;
  VerificationReport r = eigenvalue_routes(K, s, &a, &b, &c);
  r.check_name = "eigenvalues";
  r.sigma_values = {sigma};
  r.tolerances = {{"imag", 1e-8}, {"relative", tolerance}};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::string k = std::to_string(i + 1);
    r.add("1 - lambda_" + k + " committor route", b[i], a[i]);
    r.add("1 - lambda_" + k + " killed principal route", c[i], a[i]);
    r.pass = r.pass && r.relative_errors[r.relative_errors.size() - 2] <= tolerance &&
             r.relative_errors.back() <= tolerance;
  }
  return r;
}

VerificationReport check_eigenvalue_trend(const std::vector<Level>& levels, std::size_t k) {
  std::vector<Level> sorted = levels;
  std::sort(sorted.begin(), sorted.end(), [](const Level& x, const Level& y) { return x.sigma > y.sigma; });
  VerificationReport r;
  r.check_name = "eigenvalue error trend";
  r.tolerances = {{"monotone", 0.0}};
  std::vector<double> errors;
  for (const Level& level : sorted) {
    std::vector<double> a, b, c;
    eigenvalue_routes(*level.K, *level.structure, &a, &b, &c);
    if (k < 1 || k > a.size()) throw Error(ErrorCode::InvalidArgument, "level must lie in 1..N-1");
    r.sigma_values.push_back(level.sigma);
    const std::string tag = " sigma=" + fmt(level.sigma);
    r.add("1 - lambda_" + std::to_string(k) + " committor route" + tag, b[k - 1], a[k - 1]);
    r.add("1 - lambda_" + std::to_string(k) + " killed principal route" + tag, c[k - 1], a[k - 1]);
    const std::size_t last = r.relative_errors.size() - 1;
    errors.push_back(std::max(r.relative_errors[last - 1], r.relative_errors[last]));
  }
  r.pass = decreasing(errors);
  r.note = "worst route error, sigma decreasing";
  return r;
}

VerificationReport check_gap(const std::vector<Level>& levels) {
  std::vector<Level> sorted = levels;
  std::sort(sorted.begin(), sorted.end(), [](const Level& x, const Level& y) { return x.sigma > y.sigma; });
  VerificationReport r;
  r.check_name = "spectral gap";
  r.tolerances = {{"c", 0.0}};
  double c_fit = kInf;
  std::vector<double> ratios;
  for (const Level& level : sorted) {
    const std::size_t n = level.structure ? level.structure->size() : 1;
    const std::vector<std::complex<double>> ev = sorted_eigenvalues(level.K->matrix);
    const double lam_n = n < ev.size() ? std::abs(ev[n]) : 0.0;
    const double last = ev[std::min(n, ev.size()) - 1].real();
    const double log_inv = level.sigma > 0.0 && level.sigma < 1.0 ? std::log(1.0 / level.sigma) : 1.0;
    const double c = (1.0 - lam_n) * log_inv;
    const double ratio = 1.0 - lam_n > 0.0 ? (1.0 - last) / (1.0 - lam_n) : kInf;
    r.sigma_values.push_back(level.sigma);
    r.add("|lambda_N| sigma=" + fmt(level.sigma), 1.0, lam_n);
    r.add("c sigma=" + fmt(level.sigma), 0.0, c);
    r.add("gap ratio sigma=" + fmt(level.sigma), 0.0, ratio);
    c_fit = std::min(c_fit, c);
    ratios.push_back(ratio);
  }
  r.pass = c_fit > 0.0 && decreasing(ratios);
  r.note = "fitted c = " + fmt(c_fit);
  return r;
}

VerificationReport check_eigenfunctions(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k,
                                        double right_tolerance, double left_tolerance) {
  const std::size_t n = s.size();
  if (k < 1 || k >= n) throw Error(ErrorCode::InvalidArgument, "level must lie in 1..N-1");
  VerificationReport r;
  r.check_name = "eigenfunctions";
  r.sigma_values = {K.sigma};
  r.tolerances = {{"right sup distance", right_tolerance}, {"left mass relative", left_tolerance},
                  {"pi0 outside balls", 0.05}};

  const SpectralDecomposition sd = spectral_decomposition(K, n);
  const Eigen::VectorXd phi = sd.right_vectors[k].real();
  const Eigen::VectorXd est = right_eigenfunction_estimate(K, s, k);
  const std::vector<Index> inner = interior_positions(K, s);
  double num = 0.0, den = 0.0;
  for (Index p : inner) {
    num += phi[p] * est[p];
    den += phi[p] * phi[p];
  }
  if (!(den > 0.0)) throw Error(ErrorCode::DegenerateFit, "eigenfunction vanishes on the comparison cells");
  const double scale = num / den;
  double dist = 0.0;
  for (Index p : inner) dist = std::max(dist, std::abs(scale * phi[p] - est[p]));
  r.add("right sup distance", 0.0, dist);
  r.relative_errors.back() = dist;
  bool pass = !inner.empty() && dist <= right_tolerance;

  // pi_k scaled so that <pi_k, phi_k> stays one after rescaling phi_k.
  const Eigen::VectorXd pi = sd.left_vectors[k].real() / scale;
  const LeftEstimate left = left_eigenfunction_estimate(K, s, k);
  for (std::size_t j = 0; j < n; ++j) {
    const double m = mass(pi, K.positions(s.ordered_ball(j)));
    const double e = left.committor_masses[static_cast<Index>(j)];
    r.add("pi_" + std::to_string(k) + "(B" + std::to_string(j + 1) + ")", e, m);
    if (j < k) pass = pass && m < 0.0;
    if (j == k) pass = pass && m >= 0.9 && m <= 1.1;
    if (j <= k) pass = pass && r.relative_errors.back() <= left_tolerance;
  }

  const Eigen::VectorXd pi0 = sd.left_vectors[0].real();
  const double in_deepest = mass(pi0, K.positions(s.ordered_ball(0)));
  const double outside = mass(pi0, K.complement_positions(s.union_first(n)));
  r.add("pi_0(B1)", 1.0, in_deepest);
  r.add("pi_0 outside balls", 0.0, outside);
  r.relative_errors.back() = outside;
  pass = pass && outside < 0.05 && in_deepest > 0.5;
  r.pass = pass;
  r.note = "comparison cells: " + std::to_string(inner.size()) + ", fit scale " + fmt(scale);
  return r;
}

VerificationReport check_hitting_times(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t k,
                                       double tolerance, double oscillation_tolerance) {
  if (k < 1 || k >= s.size()) throw Error(ErrorCode::InvalidArgument, "level must lie in 1..N-1");
  VerificationReport r;
  r.check_name = "hitting times";
  r.sigma_values = {K.sigma};
  r.tolerances = {{"relative", tolerance}, {"oscillation", oscillation_tolerance}};
  const Eigen::VectorXd t = expected_hitting_time(K, s.union_first(k));
  const std::vector<Index> ball = K.positions(s.ordered_ball(k));
  double lo = kInf, hi = 0.0, sum = 0.0;
  for (Index p : ball) {
    lo = std::min(lo, t[p]);
    hi = std::max(hi, t[p]);
    sum += t[p];
  }
  const double mean = sum / static_cast<double>(ball.size());
  const std::vector<std::complex<double>> ev = sorted_eigenvalues(K.matrix);
  const double by_eigenvalue = 1.0 / (1.0 - ev[k].real());
  const double by_committor = 1.0 / escape_probability(K, s, k);

  double worst = 0.0;
  for (double pred : {by_eigenvalue, by_committor}) {
    worst = std::max({worst, std::abs(hi - pred) / pred, std::abs(lo - pred) / pred});
  }
  r.add("E[tau] mean vs 1/(1 - lambda_k)", by_eigenvalue, mean);
  r.add("E[tau] mean vs 1/escape", by_committor, mean);
  r.add("max relative deviation over ball", 0.0, worst);
  r.relative_errors.back() = worst;
  const double oscillation = (hi - lo) / mean;
  r.add("oscillation over ball", 0.0, oscillation);
  r.relative_errors.back() = oscillation;
  r.pass = worst <= tolerance && oscillation <= oscillation_tolerance;
  return r;
}

ExponentFit estimate_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw Error(ErrorCode::DegenerateFit, "at least three points required");
  const auto n = static_cast<Index>(points.size());
  Eigen::VectorXd x(n), y(n);
  for (Index i = 0; i < n; ++i) {
    const auto [sigma, p] = points[static_cast<std::size_t>(i)];
    if (!(sigma > 0.0) || !(p > 0.0 && p < 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "need sigma > 0 and probabilities in (0, 1)");
    }
    x[i] = -1.0 / (sigma * sigma);
    y[i] = std::log(p);
  }
  const double xm = x.mean(), ym = y.mean();
  const double sxx = (x.array() - xm).square().sum();
  if (!(sxx > 1e-12 * std::max(1.0, xm * xm))) throw Error(ErrorCode::DegenerateFit, "all sigma values coincide");
  const double sxy = ((x.array() - xm) * (y.array() - ym)).sum();
  ExponentFit fit;
  fit.H = sxy / sxx;
  fit.intercept = ym - fit.H * xm;
  const double syy = (y.array() - ym).square().sum();
  const double sse = (y.array() - fit.intercept - fit.H * x.array()).square().sum();
  fit.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

double transition_probability(const DiscretizedKernel& K, const MetastableStructure& s, std::size_t i,
                              std::size_t j) {
  if (i >= s.size() || j >= s.size() || i == j) throw Error(ErrorCode::InvalidArgument, "need two distinct balls");
  const DiscretizedKernel Ki = kill(level_trace(K, s, s.size() - 1), s.balls[i]);
  return return_committor(K, embed(K, Ki, qsd(Ki).qsd), s.balls[j], s.balls[i]);
}

Eigen::MatrixXd regress_exponents(const std::vector<Level>& levels) {
  if (levels.empty()) throw Error(ErrorCode::DegenerateFit, "no levels given");
  const auto n = static_cast<Index>(levels.front().structure->size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Constant(n, n, kInf);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      std::vector<std::pair<double, double>> points;
      for (const Level& level : levels) {
        if (static_cast<Index>(level.structure->size()) != n) {
          throw Error(ErrorCode::InvalidArgument, "levels carry different numbers of balls");
        }
        points.emplace_back(level.sigma, transition_probability(*level.K, *level.structure,
                                                                static_cast<std::size_t>(i),
                                                                static_cast<std::size_t>(j)));
      }
      H(i, j) = estimate_exponent(points).H;
    }
  }
  return H;
}

std::vector<VerificationReport> run_exact_suite(const DiscretizedKernel& K, const std::vector<CellSet>& sets,
                                                std::size_t eigen_count, std::uint64_t seed) {
  std::vector<VerificationReport> out;
  const auto n = static_cast<Index>(K.size());
  Rng rng = make_rng(seed, 0x5eed);
  const SpectralDecomposition sd = spectral_decomposition(K, std::min<std::size_t>(eigen_count, K.size()));

  {
    VerificationReport r;
    r.check_name = "committor detailed balance";
    r.tolerances = {{"absolute", 1e-10}};
    if (K.has_kill()) {
      r.pass = true;
      r.note = "skipped: kernel loses mass";
    } else {
      const Eigen::VectorXd pi0 = sd.left_vectors[0].real();
      std::vector<std::size_t> support;
      for (Index p = 0; p < n; ++p) {
        if (pi0[p] > 1e-12 * pi0.maxCoeff()) support.push_back(static_cast<std::size_t>(p));
      }
      r.pass = support.size() >= 2;
      const std::size_t max_size = std::max<std::size_t>(1, std::min<std::size_t>(5, support.size() / 4));
      for (int trial = 0; trial < 5 && r.pass; ++trial) {
        std::shuffle(support.begin(), support.end(), rng);
        const std::size_t a_size = 1 + rng() % max_size, b_size = 1 + rng() % max_size;
        std::vector<Index> pa, pb;
        for (std::size_t i = 0; i < a_size; ++i) pa.push_back(static_cast<Index>(support[i]));
        for (std::size_t i = a_size; i < a_size + b_size && i < support.size(); ++i) {
          pb.push_back(static_cast<Index>(support[i]));
        }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        const CellSet A = cells_at(K, pa), B = cells_at(K, pb);
        const Eigen::VectorXd ab = return_committor_vector(K, B, A);
        const Eigen::VectorXd ba = return_committor_vector(K, A, B);
        double lhs = 0.0, rhs = 0.0;
        for (Index p : pa) lhs += pi0[p] * ab[p];
        for (Index p : pb) rhs += pi0[p] * ba[p];
        r.add("trial " + std::to_string(trial), lhs, rhs);
        r.relative_errors.back() = std::abs(lhs - rhs);
        r.pass = r.pass && std::abs(lhs - rhs) <= 1e-10;
      }
    }
    out.push_back(r);
  }

  VerificationReport doob, exit, rows, zero, lemma, fk;
  doob.check_name = "doob spectrum";
  doob.tolerances = {{"absolute", 1e-9}};
  doob.pass = true;
  exit.check_name = "geometric exit law";
  exit.tolerances = {{"absolute", 1e-12}, {"n_max", 50}};
  exit.pass = true;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const std::string tag = "set " + std::to_string(i);
    const DiscretizedKernel KA = kill(K, sets[i]);
    const QsdResult q = qsd(KA);
    const DiscretizedKernel D = doob_transform(KA, q);
    const std::vector<std::complex<double>> ea = sorted_eigenvalues(KA.matrix);
    const std::vector<std::complex<double>> ed = sorted_eigenvalues(D.matrix);
    double worst = 0.0;
    for (std::size_t j = 0; j < std::min<std::size_t>(10, ea.size()); ++j) {
      double best = kInf;
      for (const auto& z : ed) best = std::min(best, std::abs(z - ea[j] / q.lambda0));
      worst = std::max(worst, best);
    }
    doob.add(tag, 0.0, worst);
    doob.relative_errors.back() = worst;
    doob.pass = doob.pass && worst <= 1e-9;

    const std::vector<double> law = exit_time_law(KA, q.qsd, 50);
    double dev = 0.0;
    for (std::size_t m = 0; m < law.size(); ++m) {
      dev = std::max(dev, std::abs(law[m] - std::pow(q.lambda0, static_cast<double>(m)) * (1.0 - q.lambda0)));
    }
    exit.add(tag, 0.0, dev);
    exit.relative_errors.back() = dev;
    exit.pass = exit.pass && dev <= 1e-12;
  }
  out.push_back(doob);
  out.push_back(exit);

  const CellSet all = merged(sets);
  rows.check_name = "trace row sums";
  rows.tolerances = {{"absolute", 1e-10}};
  rows.pass = true;
  zero.check_name = "laplace kernel at u = 0";
  zero.tolerances = {{"absolute", 1e-12}};
  zero.pass = true;
  std::vector<CellSet> probes = sets;
  if (sets.size() > 1) probes.push_back(all);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const std::string tag = i < sets.size() ? "set " + std::to_string(i) : "union";
    const DiscretizedKernel T = trace(K, probes[i]);
    if (!K.has_kill()) {
      const double dev = (T.matrix.rowwise().sum().array() - 1.0).abs().maxCoeff();
      rows.add(tag, 1.0, 1.0 + dev);
      rows.relative_errors.back() = dev;
      rows.pass = rows.pass && dev <= 1e-10;
    }
    const double diff = (laplace_kernel(K, probes[i], 0.0).matrix - T.matrix).cwiseAbs().maxCoeff();
    zero.add(tag, 0.0, diff);
    zero.relative_errors.back() = diff;
    zero.pass = zero.pass && diff <= 1e-12;
  }
  if (K.has_kill()) rows.note = "skipped: kernel loses mass";
  out.push_back(rows);
  out.push_back(zero);

  lemma.check_name = "left eigenfunction laplace identity";
  lemma.tolerances = {{"absolute", 1e-8}};
  lemma.pass = true;
  fk.check_name = "feynman-kac consistency";
  fk.tolerances = {{"absolute", 1e-10}};
  fk.pass = true;
  const std::vector<Index> pa = K.positions(all);
  const std::vector<Index> pc = K.complement_positions(all);
  double rho_c = 0.0;
  if (!pc.empty()) {
    const DiscretizedKernel Kc = kill(K, cells_at(K, pc));
    rho_c = spectral_radius(Kc.matrix);
  }
  for (std::size_t k = 0; k < sd.count; ++k) {
    const std::complex<double> lam = sd.eigenvalues[k];
    if (lam.imag() != 0.0 || !(lam.real() > rho_c)) {
      lemma.note += "pair " + std::to_string(k) + " skipped; ";
      continue;
    }
    const double u = -std::log(lam.real());
    const DiscretizedKernel Ku = laplace_kernel(K, all, u);
    const Eigen::VectorXd pi = sd.left_vectors[k].real();
    const Eigen::VectorXd phi = sd.right_vectors[k].real();
    Eigen::VectorXd piA(static_cast<Index>(pa.size())), phiA(static_cast<Index>(pa.size()));
    for (std::size_t i = 0; i < pa.size(); ++i) {
      piA[static_cast<Index>(i)] = pi[pa[i]];
      phiA[static_cast<Index>(i)] = phi[pa[i]];
    }
    const Eigen::RowVectorXd flux = piA.transpose() * Ku.matrix;
    double worst = 0.0;
    for (const CellSet& B : sets) {
      const std::vector<Index> pb = Ku.positions(B);
      double lhs = 0.0, rhs = 0.0;
      for (Index p : pb) {
        lhs += flux[p];
        rhs += piA[p];
      }
      worst = std::max(worst, std::abs(lhs - lam.real() * rhs));
    }
    const double right = (Ku.matrix * phiA - lam.real() * phiA).cwiseAbs().maxCoeff();
    lemma.add("pair " + std::to_string(k) + " left", 0.0, worst);
    lemma.relative_errors.back() = worst;
    lemma.add("pair " + std::to_string(k) + " right", 0.0, right);
    lemma.relative_errors.back() = right;
    lemma.pass = lemma.pass && worst <= 1e-8 && right <= 1e-8;
  }
  out.push_back(lemma);

  if (pc.empty()) {
    fk.note = "skipped: probe sets cover every state";
  } else {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double u_max = rho_c > 0.0 ? -std::log(rho_c) : 1.0;
    for (double u : {-0.3, 0.0, 0.5 * u_max}) {
      Eigen::VectorXd boundary(static_cast<Index>(pa.size()));
      for (Index i = 0; i < boundary.size(); ++i) boundary[i] = unit(rng);
      const Eigen::VectorXd phi = feynman_kac(K, all, u, boundary);
      const Eigen::VectorXd Kphi = K.matrix * phi;
      double worst = 0.0;
      for (Index p : pc) worst = std::max(worst, std::abs(Kphi[p] - std::exp(-u) * phi[p]));
      worst /= std::max(1.0, phi.cwiseAbs().maxCoeff());
      fk.add("u=" + fmt(u), 0.0, worst);
      fk.relative_errors.back() = worst;
      fk.pass = fk.pass && worst <= 1e-10;
    }
  }
  out.push_back(fk);
  return out;
}

std::vector<BoundCertificate> run_certificates(const DiscretizedKernel& K, const MetastableStructure& s,
                                               const std::vector<int>& iterates) {
  std::vector<BoundCertificate> out;
  const std::size_t n = s.size();
  const DiscretizedKernel K0 = level_trace(K, s, n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const DiscretizedKernel KB = kill(K0, s.ordered_ball(i));
    std::optional<BoundCertificate> best;
    for (int steps : {1, 2, 4, 8}) {
      BoundCertificate c = spectral_gap_bound(KB, steps);
      if (!best || c.bound_value < best->bound_value) best = c;
    }
    best->name += " (ball " + std::to_string(i + 1) + ")";
    out.push_back(*best);
    const int steps = static_cast<int>(std::lround(best->inputs[0].second));
    BoundCertificate osc = oscillation_bound(KB, steps, best->inputs[1].second);
    osc.name += " (ball " + std::to_string(i + 1) + ")";
    out.push_back(osc);
  }
  if (n > 1) {
    const std::vector<std::complex<double>> ev = sorted_eigenvalues(K.matrix);
    const double u = -std::log(ev[n - 1].real());
    for (int m : iterates) {
      for (BoundCertificate c : norm_certificates(K, s, u, m)) {
        c.name += " (m=" + std::to_string(m) + ")";
        out.push_back(c);
      }
    }
    const Eigen::MatrixXd P = build_P(K0, s, n - 1).P;
    for (const BoundCertificate& c : kstar_spectrum(P).bounds) out.push_back(c);
    out.push_back(resolvent_certificate(P));
  }
  return out;
}

}  // namespace rpmap

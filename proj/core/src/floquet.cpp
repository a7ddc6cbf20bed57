#include "rpmap/floquet.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "rpmap/error.hpp"
#include "rpmap/poincare.hpp"

namespace rpmap {

namespace {

std::vector<std::complex<double>> sorted_multipliers(const Eigen::VectorXcd& values) {
  std::vector<std::complex<double>> out(values.data(), values.data() + values.size());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    return a.imag() > b.imag();
  });
  return out;
}

}  // namespace

Eigen::MatrixXd drift_jacobian(const SdeModel& model, const State& z, double h) {
  const int n = model.dimension;
  Eigen::MatrixXd J(n, n);
  for (int a = 0; a < n; ++a) {
    State zp = z, zm = z;
    zp[a] += h;
    zm[a] -= h;
    J.col(a) = Eigen::VectorXd((model.drift(zp) - model.drift(zm)) / (2.0 * h));
  }
  return J;
}

PeriodicOrbit find_periodic_orbit(const SdeModel& model, const State& guess, const OrbitOptions& options) {
  const SdeModel quiet = model.with_sigma(0.0);
  const int d = static_cast<int>(guess.size());
  auto residual = [&](const State& x, double* time) {
    return State(deterministic_return(quiet, x, options.dt, options.max_return_time, time) - x);
  };

  State x = guess;
  double period = 0.0;
  State F = residual(x, &period);
  int it = 0;
  for (; it < options.max_iterations && F.norm() > options.tol; ++it) {
    Eigen::MatrixXd J(d, d);
    for (int a = 0; a < d; ++a) {
      State xp = x, xm = x;
      xp[a] += options.fd_step;
      xm[a] -= options.fd_step;
      J.col(a) = Eigen::VectorXd((residual(xp, nullptr) - residual(xm, nullptr)) / (2.0 * options.fd_step));
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) throw Error(ErrorCode::NoConvergence, "return map Jacobian minus identity is singular");
    const State step = lu.solve(Eigen::VectorXd(-F));
    double damping = 1.0;
    State trial = x + step;
    State Ft = residual(trial, &period);
    while (Ft.norm() >= F.norm() && damping > 1e-4) {
      damping *= 0.5;
      trial = x + damping * step;
      Ft = residual(trial, &period);
    }
    x = trial;
    F = Ft;
  }
  if (!(F.norm() <= options.tol)) {
    throw Error(ErrorCode::NoConvergence, "no fixed point after " + std::to_string(options.max_iterations) +
                                              " Newton steps");
  }
  residual(x, &period);

  PeriodicOrbit orbit;
  orbit.chart_point = x;
  orbit.anchor = quiet.primary.lift(x);
  orbit.period = period;
  orbit.closure = F.norm();
  State z = orbit.anchor;
  const auto steps = static_cast<std::size_t>(std::ceil(period / options.dt));
  orbit.samples.reserve(steps + 1);
  orbit.samples.push_back(z);
  for (std::size_t i = 0; i < steps; ++i) {
    const double h = std::min(options.dt, period - static_cast<double>(i) * options.dt);
    z = z + quiet.drift(z) * h;
    orbit.samples.push_back(z);
  }
  const Monodromy mono = monodromy(quiet, orbit, options.dt, options.fd_step);
  orbit.multipliers = mono.multipliers;
  orbit.stable = true;
  bool skipped_trivial = false;
  for (const auto& mu : mono.multipliers) {
    if (!skipped_trivial && mu == mono.trivial) {
      skipped_trivial = true;
      continue;
    }
    if (!(std::abs(mu) < 1.0)) orbit.stable = false;
  }
  return orbit;
}

Monodromy monodromy(const SdeModel& model, const PeriodicOrbit& orbit, double dt, double fd_step) {
  const int n = model.dimension;
  const double h = dt / 10.0;
  const auto full = static_cast<std::size_t>(std::floor(orbit.period / h));
  const double last = orbit.period - static_cast<double>(full) * h;

  State z = orbit.anchor;
  Eigen::MatrixXd U = Eigen::MatrixXd::Identity(n, n);
  double divergence = 0.0;
  auto advance = [&](double step) {
    const Eigen::MatrixXd J = drift_jacobian(model, z, fd_step);
    U = U + step * (J * U);
    divergence += step * J.trace();
    z = z + model.drift(z) * step;
  };
  for (std::size_t i = 0; i < full; ++i) advance(h);
  if (last > 0.0) advance(last);

  Monodromy out;
  out.U = U;
  out.liouville_det = std::exp(divergence);
  const Eigen::EigenSolver<Eigen::MatrixXd> es(U);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "monodromy eigen decomposition failed");
  out.multipliers = sorted_multipliers(es.eigenvalues());
  Eigen::Index at = 0;
  for (Eigen::Index i = 1; i < es.eigenvalues().size(); ++i) {
    if (std::abs(es.eigenvalues()[i] - 1.0) < std::abs(es.eigenvalues()[at] - 1.0)) at = i;
  }
  out.trivial = es.eigenvalues()[at];
  Eigen::VectorXcd v = es.eigenvectors().col(at);
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  const Eigen::VectorXd vr = (v / v[big]).real();
  const Eigen::VectorXd f = model.drift(orbit.anchor);
  const double c = std::min(1.0, std::abs(vr.dot(f)) / (vr.norm() * f.norm()));
  out.trivial_angle = std::acos(c);
  return out;
}

}  // namespace rpmap

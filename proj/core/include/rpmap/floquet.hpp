#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "rpmap/sde.hpp"

namespace rpmap {

struct OrbitOptions {
  double dt = 1e-3;
  double tol = 1e-10;         // on |P(x) - x| in chart coordinates
  int max_iterations = 50;
  double fd_step = 1e-6;      // finite differences of the map and of the drift
  double max_return_time = 1e3;
};

struct Monodromy {
  Eigen::MatrixXd U;
  std::vector<std::complex<double>> multipliers;  // sorted by decreasing modulus
  std::complex<double> trivial;                   // the multiplier nearest 1
  double trivial_angle = 0.0;                     // angle between its eigenvector and f(anchor)
  double liouville_det = 0.0;                     // exp of the integrated divergence
};

struct PeriodicOrbit {
  State anchor;       // state on the primary section
  State chart_point;  // fixed point of the return map
  double period = 0.0;
  double closure = 0.0;  // |P(x*) - x*|
  std::vector<State> samples;
  std::vector<std::complex<double>> multipliers;
  bool stable = false;
};

/// Damped Newton on x -> P(x) - x with a finite-difference Jacobian; the
/// deterministic flow is used whatever the model's sigma. Throws
/// NoConvergence.
PeriodicOrbit find_periodic_orbit(const SdeModel& model, const State& guess, const OrbitOptions& options = {});

/// Variational equation along the orbit, integrated with steps dt / 10.
Monodromy monodromy(const SdeModel& model, const PeriodicOrbit& orbit, double dt = 1e-3, double fd_step = 1e-6);

/// Central-difference Jacobian of the drift.
Eigen::MatrixXd drift_jacobian(const SdeModel& model, const State& z, double h = 1e-6);

}  // namespace rpmap

#pragma once

#include <cmath>
#include <initializer_list>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "rpmap/metastable.hpp"

namespace rpmap::testing {

inline State point(std::initializer_list<double> xs) {
  State s(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) s[i++] = x;
  return s;
}

inline Eigen::MatrixXd K3() {
  Eigen::MatrixXd m(3, 3);
  m << 0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8;
  return m;
}

inline DiscretizedKernel toy(const Eigen::MatrixXd& m) { return DiscretizedKernel::from_matrix(m); }

/// Structure on a hand-written kernel: balls given in metastable order.
inline MetastableStructure toy_structure(std::initializer_list<CellSet> balls) {
  MetastableStructure s;
  for (const CellSet& b : balls) {
    s.order.push_back(s.balls.size());
    s.balls.push_back(b);
    s.centers.push_back(State::Zero(1));
  }
  s.H = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(s.size()), static_cast<Eigen::Index>(s.size()),
                                  std::numeric_limits<double>::infinity());
  return s;
}

/// Row-stochastic matrix with uniform(0,1) weights.
template <class Gen>
Eigen::MatrixXd random_stochastic(Eigen::Index n, Gen& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = u(gen);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

/// A small reference kernel at sigma^2 = 0.01 with its ball structure,
/// built once per test binary.
struct SmallReference {
  SdeModel model;
  DiscretizedKernel K;
  MetastableStructure s;
};

inline const SmallReference& small_reference() {
  static const SmallReference ref = [] {
    SmallReference r;
    r.model = reference_model(1.0, 0.1);
    r.K = build_kernel(r.model, section_grid(r.model, {100}), 400, 0.01, 7);
    r.s = detect_balls(r.K, r.model, 0.25);
    apply_hierarchy(r.s, r.model.barrier_exponents, "analytic");
    return r;
  }();
  return ref;
}

}  // namespace rpmap::testing

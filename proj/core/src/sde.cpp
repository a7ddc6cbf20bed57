#include "rpmap/sde.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/random/normal_distribution.hpp>

#include "rpmap/error.hpp"

namespace rpmap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool all_finite(const State& z) {
  for (int i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) return false;
  }
  return true;
}

// Fraction along za -> zb at which the signed distance reaches the next level
// above its starting value, if that level is reached within the segment.
bool next_level_crossing(const Section& s, const State& za, const State& zb, double& frac) {
  const double a = s.signed_distance(za);
  const double b = s.signed_distance(zb);
  if (!(b > a)) return false;
  const double level = s.period > 0.0 ? (std::floor(a / s.period) + 1.0) * s.period : 0.0;
  if (a < level && level <= b) {
    frac = (level - a) / (b - a);
    return true;
  }
  return false;
}

bool transversal(const SdeModel& model, const Section& s, const State& z) {
  const State f = model.drift(z);
  const double fn = f.dot(s.normal) / s.normal.norm();
  return std::abs(fn) >= model.transversality_margin * f.norm() && f.norm() > 0.0;
}

class Stepper {
 public:
  Stepper(const SdeModel& model, double dt) : model_(model), dt_(dt), sqrt_dt_(std::sqrt(dt)) {
    noise_.resize(model.noise_dimension);
    if (model.constant_diffusion) scaled_g_ = model.sigma * model.diffusion(State::Zero(model.dimension));
  }

  State step(const State& z, Rng* rng) {
    State next = z + model_.drift(z) * dt_;
    if (model_.sigma > 0.0 && rng != nullptr) {
      for (int i = 0; i < model_.noise_dimension; ++i) noise_[i] = normal_(*rng) * sqrt_dt_;
      if (model_.constant_diffusion) {
        next.noalias() += scaled_g_ * noise_;
      } else {
        next.noalias() += model_.sigma * (model_.diffusion(z) * noise_);
      }
    }
    if (!all_finite(next)) throw Error(ErrorCode::NonFiniteState, "state became non-finite");
    return next;
  }

 private:
  const SdeModel& model_;
  double dt_;
  double sqrt_dt_;
  State noise_;
  StateMatrix scaled_g_;
  boost::random::normal_distribution<double> normal_;
};

std::vector<double> poly_from_roots(const std::vector<double>& roots) {
  std::vector<double> c{1.0};  // c[i] multiplies r^i
  for (double root : roots) {
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= root * c[i];
    }
    c = std::move(next);
  }
  return c;
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ stream));
}

bool Box::contains(const State& z) const {
  for (int i = 0; i < z.size(); ++i) {
    if (z[i] < lo[i] || z[i] > hi[i]) return false;
  }
  return true;
}

bool Section::in_box(const State& x) const {
  for (int i = 0; i < x.size(); ++i) {
    if (x[i] < box_lo[i] || x[i] > box_hi[i]) return false;
  }
  return true;
}

SdeModel SdeModel::with_sigma(double s) const {
  SdeModel copy = *this;
  copy.sigma = s;
  return copy;
}

StateMatrix SdeModel::diffusion_matrix(const State& z) const {
  const StateMatrix g = diffusion(z);
  return g * g.transpose();
}

void SdeModel::validate() const {
  if (dimension < 2 || dimension > kMaxDim) {
    throw Error(ErrorCode::InvalidArgument, "dimension must be in [2, " + std::to_string(kMaxDim) + "]");
  }
  if (!drift || !diffusion) throw Error(ErrorCode::InvalidArgument, "drift and diffusion required");
  const int d = dimension - 1;
  for (const Section* s : {&primary, &secondary}) {
    if (s->normal.size() != dimension || s->origin.size() != dimension || s->basis.rows() != dimension ||
        s->basis.cols() != d || s->box_lo.size() != d || s->box_hi.size() != d) {
      throw Error(ErrorCode::InvalidArgument, "section dimensions inconsistent with model");
    }
  }

  // Sample each chart box at its corners and center.
  auto chart_samples = [d](const Section& s) {
    std::vector<State> pts;
    for (int mask = 0; mask < (1 << d); ++mask) {
      State x(d);
      for (int i = 0; i < d; ++i) x[i] = (mask >> i) & 1 ? s.box_hi[i] : s.box_lo[i];
      pts.push_back(x);
    }
    pts.push_back((s.box_lo + s.box_hi) / 2.0);
    return pts;
  };
  auto on_section = [](const Section& s, const State& z) {
    double a = s.signed_distance(z);
    if (s.period > 0.0) a -= std::round(a / s.period) * s.period;
    return std::abs(a) < 1e-9;
  };
  for (const State& x : chart_samples(primary)) {
    const State z = primary.lift(x);
    if (on_section(secondary, z)) throw Error(ErrorCode::InvalidArgument, "sections intersect");
    if (!transversal(*this, primary, z)) {
      throw Error(ErrorCode::InvalidArgument, "drift not transversal to the primary section");
    }
  }
  for (const State& x : chart_samples(secondary)) {
    const State z = secondary.lift(x);
    if (on_section(primary, z)) throw Error(ErrorCode::InvalidArgument, "sections intersect");
    if (!transversal(*this, secondary, z)) {
      throw Error(ErrorCode::InvalidArgument, "drift not transversal to the secondary section");
    }
  }

  auto finite_or = [](double v, double fallback) { return std::isfinite(v) ? v : fallback; };
  for (int mask = 0; mask < (1 << dimension); ++mask) {
    State z(dimension);
    for (int i = 0; i < dimension; ++i) {
      z[i] = (mask >> i) & 1 ? finite_or(domain.hi[i], 1.0) : finite_or(domain.lo[i], -1.0);
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(diffusion_matrix(z)));
    const auto ev = es.eigenvalues();
    if (ev.minCoeff() < ellipticity_lo || ev.maxCoeff() > ellipticity_hi) {
      throw Error(ErrorCode::InvalidArgument, "diffusion matrix outside the ellipticity band");
    }
  }
}

bool CrossingTracker::feed(double t0, const State& z0, double t1, const State& z1, double& t_hit,
                           State& z_hit) {
  State za = z0;
  double ta = t0;
  double frac = 0.0;
  if (!armed_) {
    if (!next_level_crossing(model_->secondary, za, z1, frac)) return false;
    armed_ = true;
    za = za + frac * (z1 - za);
    ta = ta + frac * (t1 - ta);
  }
  if (!next_level_crossing(model_->primary, za, z1, frac)) return false;
  const State z = za + frac * (z1 - za);
  if (!transversal(*model_, model_->primary, z)) return false;
  armed_ = false;
  t_hit = ta + frac * (t1 - ta);
  z_hit = z;
  return true;
}

Path integrate_path(const SdeModel& model, const State& z0, double dt, double horizon,
                    std::uint64_t seed) {
  if (!(dt > 0.0) || !(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt and horizon must be positive");
  if (!model.domain.contains(z0)) throw Error(ErrorCode::InvalidArgument, "z0 outside the domain");
  Rng rng = make_rng(seed);
  Stepper stepper(model, dt);
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
  Path path;
  path.dt = dt;
  path.times.reserve(steps + 1);
  path.states.reserve(steps + 1);
  path.times.push_back(0.0);
  path.states.push_back(z0);
  State z = z0;
  for (std::size_t i = 1; i <= steps; ++i) {
    z = stepper.step(z, &rng);
    path.times.push_back(static_cast<double>(i) * dt);
    path.states.push_back(z);
    if (model.confinement == Confinement::KilledB && !model.domain.contains(z)) {
      path.exited = true;
      break;
    }
  }
  return path;
}

CrossingChain detect_crossings(const SdeModel& model, const Path& path) {
  CrossingTracker tracker(model);
  CrossingChain chain;
  double t_hit = 0.0;
  State z_hit;
  for (std::size_t i = 0; i + 1 < path.states.size(); ++i) {
    if (tracker.feed(path.times[i], path.states[i], path.times[i + 1], path.states[i + 1], t_hit, z_hit)) {
      chain.points.push_back(model.primary.chart(z_hit));
      chain.crossing_times.push_back(t_hit);
    }
  }
  if (chain.points.empty()) throw Error(ErrorCode::NoCrossing, "path never crosses the secondary then the primary section");
  if (path.exited) chain.killed_at = chain.points.size();
  return chain;
}

double path_action(const SdeModel& model, const Path& path) {
  if (path.states.size() < 2) throw Error(ErrorCode::InvalidArgument, "path needs at least two points");
  double action = 0.0;
  for (std::size_t i = 0; i + 1 < path.states.size(); ++i) {
    const double h = path.times[i + 1] - path.times[i];
    const State& z = path.states[i];
    const State v = (path.states[i + 1] - z) / h - model.drift(z);
    const Eigen::MatrixXd D = model.diffusion_matrix(z);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
    const auto ev = es.eigenvalues();
    if (!(ev.minCoeff() > 1e-12 * std::max(1.0, ev.maxCoeff()))) {
      throw Error(ErrorCode::SingularDiffusion, "diffusion matrix singular along the path");
    }
    const Eigen::VectorXd w = es.eigenvectors().transpose() * Eigen::VectorXd(v);
    action += 0.5 * (w.array().square() / ev.array()).sum() * h;
  }
  return action;
}

double radial_potential(const std::vector<double>& roots, double r) {
  const std::vector<double> c = poly_from_roots(roots);
  double v = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) v = v * r + c[i] / static_cast<double>(i + 1);
  return v * r;
}

SdeModel radial_model(const std::vector<double>& roots, double omega, double sigma, double theta_noise,
                      double r_lo, double r_hi) {
  if (!(omega > 0.0) || sigma < 0.0) throw Error(ErrorCode::InvalidArgument, "omega > 0 and sigma >= 0 required");
  if (roots.empty() || roots.size() % 2 == 0) throw Error(ErrorCode::InvalidArgument, "odd number of roots required");
  for (std::size_t i = 1; i < roots.size(); ++i) {
    if (!(roots[i] > roots[i - 1])) throw Error(ErrorCode::InvalidArgument, "roots must increase");
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double pi = std::numbers::pi;

  SdeModel m;
  m.name = "radial";
  m.dimension = 2;
  m.noise_dimension = 2;
  m.sigma = sigma;
  m.drift = [roots, omega](const State& z) {
    double vp = 1.0;
    for (double root : roots) vp *= z[0] - root;
    State f(2);
    f << -vp, omega;
    return f;
  };
  m.constant_diffusion = true;
  m.diffusion = [theta_noise](const State&) {
    StateMatrix g = StateMatrix::Zero(2, 2);
    g(0, 0) = 1.0;
    g(1, 1) = theta_noise;
    return g;
  };
  m.domain.lo = State(2);
  m.domain.hi = State(2);
  m.domain.lo << r_lo, -inf;
  m.domain.hi << r_hi, inf;

  auto angular_section = [&](double angle) {
    Section s;
    s.normal = State(2);
    s.normal << 0.0, 1.0;
    s.offset = angle;
    s.period = 2.0 * pi;
    s.origin = State(2);
    s.origin << 0.0, angle;
    s.basis = StateMatrix(2, 1);
    s.basis << 1.0, 0.0;
    s.box_lo = State(1);
    s.box_hi = State(1);
    s.box_lo << r_lo;
    s.box_hi << r_hi;
    return s;
  };
  m.primary = angular_section(0.0);
  m.secondary = angular_section(pi);

  // Stable radii sit at even positions; climbing between neighbouring wells
  // costs twice the potential rise, descending is free.
  std::vector<double> wells;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    State x(1);
    x << roots[i];
    if (i % 2 == 1) {
      m.unstable_orbits.push_back(x);
      continue;
    }
    m.stable_orbits.push_back(x);
    wells.push_back(roots[i]);
  }
  const auto n = static_cast<Eigen::Index>(wells.size());
  m.barrier_exponents = Eigen::MatrixXd::Constant(n, n, inf);
  auto V = [&](double r) { return radial_potential(roots, r); };
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      double cost = 0.0;
      if (j > i) {
        for (Eigen::Index w = i; w < j; ++w) cost += 2.0 * (V(roots[2 * w + 1]) - V(roots[2 * w]));
      } else {
        for (Eigen::Index w = i; w > j; --w) cost += 2.0 * (V(roots[2 * w - 1]) - V(roots[2 * w]));
      }
      m.barrier_exponents(i, j) = cost;
    }
  }
  return m;
}

SdeModel reference_model(double omega, double sigma, double theta_noise) {
  SdeModel m = radial_model({1.0, 1.5, 2.2}, omega, sigma, theta_noise, 0.5, 3.0);
  m.name = "reference";
  return m;
}

LegResult simulate_leg(const SdeModel& model, const State& x0, double dt, double max_time, Rng& rng) {
  Stepper stepper(model, dt);
  CrossingTracker tracker(model);
  State z = model.primary.lift(x0);
  const bool killing = model.confinement == Confinement::KilledB;
  LegResult out;
  double t_hit = 0.0;
  State z_hit;
  for (std::size_t i = 0;; ++i) {
    const double t0 = static_cast<double>(i) * dt;
    if (t0 >= max_time) break;
    const double t1 = static_cast<double>(i + 1) * dt;
    State next = stepper.step(z, &rng);
    if (killing && !model.domain.contains(next)) {
      out.status = LegStatus::Killed;
      out.time = t1;
      return out;
    }
    if (tracker.feed(t0, z, t1, next, t_hit, z_hit)) {
      out.status = LegStatus::Returned;
      out.point = model.primary.chart(z_hit);
      out.time = t_hit;
      return out;
    }
    z = next;
  }
  out.status = LegStatus::Timeout;
  out.time = max_time;
  return out;
}

}  // namespace rpmap

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rpmap {

/// State vectors live on the stack: models are low dimensional and the
/// integrator runs in the hot loop of kernel estimation.
inline constexpr int kMaxDim = 6;
using State = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

using Rng = std::mt19937_64;

/// Decorrelated generator for (seed, stream); streams are cell indices when
/// estimating kernel rows.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

enum class Confinement { RecurrentA, KilledB };

struct Box {
  State lo;
  State hi;

  bool contains(const State& z) const;
};

/// Affine hyperplane {z : <normal, z> = offset (mod period)} with a chart
/// z = origin + basis * x. Only crossings in the direction of `normal` count.
/// A positive period identifies levels offset + m * period, which is how an
/// angular section such as {theta = 0 mod 2 pi} is expressed on an unwrapped
/// angle coordinate.
struct Section {
  State normal;
  double offset = 0.0;
  double period = 0.0;
  State origin;
  StateMatrix basis;  // (d+1) x d, orthonormal columns orthogonal to normal
  State box_lo;       // chart parameter box
  State box_hi;

  double signed_distance(const State& z) const { return normal.dot(z) - offset; }
  State lift(const State& x) const { return origin + basis * x; }
  State chart(const State& z) const { return basis.transpose() * (z - origin); }
  bool in_box(const State& x) const;
};

struct SdeModel {
  std::string name;
  int dimension = 0;        // d + 1
  int noise_dimension = 0;  // columns of g
  std::function<State(const State&)> drift;
  std::function<StateMatrix(const State&)> diffusion;
  Box domain;
  Section primary;
  Section secondary;
  double sigma = 0.0;
  Confinement confinement = Confinement::RecurrentA;

  bool constant_diffusion = false;  // lets the integrator evaluate g once

  double transversality_margin = 1e-6;
  double ellipticity_lo = 1e-8;
  double ellipticity_hi = 1e8;

  /// Catalog knowledge, empty for programmatic models: chart coordinates of
  /// the stable and unstable orbits and the stable orbits' transition
  /// exponents H(i, j).
  std::vector<State> stable_orbits;
  std::vector<State> unstable_orbits;
  Eigen::MatrixXd barrier_exponents;

  SdeModel with_sigma(double s) const;
  StateMatrix diffusion_matrix(const State& z) const;

  /// Throws InvalidArgument when the sections intersect, the drift is not
  /// transversal at sampled chart points, or D(z) leaves the ellipticity band.
  void validate() const;
};

struct Path {
  std::vector<double> times;
  std::vector<State> states;
  double dt = 0.0;
  bool exited = false;  // variant B: truncated where the path left the domain
};

struct CrossingChain {
  std::vector<State> points;          // chart coordinates of X_n
  std::vector<double> crossing_times;
  std::optional<std::size_t> killed_at;
};

/// Euler-Maruyama. Throws NonFiniteState.
Path integrate_path(const SdeModel& model, const State& z0, double dt, double horizon,
                    std::uint64_t seed);

CrossingChain detect_crossings(const SdeModel& model, const Path& path);

/// Left-endpoint Riemann sum of the Freidlin-Wentzell integrand. Throws
/// SingularDiffusion.
double path_action(const SdeModel& model, const Path& path);

/// dr = -V'(r) dt + sigma dW1, dtheta = omega dt + sigma theta_noise dW2 with
/// V'(r) = (r - 1)(r - 1.5)(r - 2.2), sections theta = 0 and theta = pi.
SdeModel reference_model(double omega, double sigma, double theta_noise = 0.1);

/// Radial gradient model with V'(r) = prod (r - roots[i]); roots must be
/// increasing and odd in number so that stable and unstable radii alternate.
SdeModel radial_model(const std::vector<double>& roots, double omega, double sigma,
                      double theta_noise, double r_lo, double r_hi);

/// Potential of radial_model normalized so that V(0) = 0.
double radial_potential(const std::vector<double>& roots, double r);

/// Tracks the alternation rule: a crossing of the primary section counts only
/// after a crossing of the secondary one. Segments are linear between steps,
/// so the signed distance is affine along each segment and crossing times are
/// solved exactly.
class CrossingTracker {
 public:
  explicit CrossingTracker(const SdeModel& model) : model_(&model) {}

  /// Feeds the step z0 -> z1 over [t0, t1]. Returns true when a recorded
  /// primary crossing occurs; fills its time and state.
  bool feed(double t0, const State& z0, double t1, const State& z1, double& t_hit, State& z_hit);

  bool armed() const { return armed_; }
  void reset() { armed_ = false; }

 private:
  const SdeModel* model_;
  bool armed_ = false;
};

enum class LegStatus { Returned, Killed, Timeout };

struct LegResult {
  LegStatus status = LegStatus::Timeout;
  State point;  // chart coordinates of the return (Returned only)
  double time = 0.0;
};

/// One step of the chain: start on the primary section at chart point x0,
/// integrate until the next recorded primary crossing, a domain exit
/// (variant B) or max_time. Throws NonFiniteState.
LegResult simulate_leg(const SdeModel& model, const State& x0, double dt, double max_time, Rng& rng);

}  // namespace rpmap

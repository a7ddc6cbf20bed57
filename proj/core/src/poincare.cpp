#include "rpmap/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "rpmap/error.hpp"

namespace rpmap {

Grid Grid::uniform(const State& lo, const State& hi, const std::vector<int>& counts) {
  if (lo.size() != hi.size() || static_cast<std::size_t>(lo.size()) != counts.size() || counts.empty()) {
    throw Error(ErrorCode::InvalidArgument, "grid bounds and counts disagree in dimension");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (counts[i] < 1 || !(hi[k] > lo[k])) throw Error(ErrorCode::InvalidArgument, "degenerate grid axis");
  }
  return Grid{lo, hi, counts};
}

Grid Grid::unit(int n) {
  State lo(1), hi(1);
  lo << 0.0;
  hi << static_cast<double>(n);
  return uniform(lo, hi, {n});
}

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int c : counts) n *= static_cast<std::size_t>(c);
  return n;
}

State Grid::width() const {
  State w(dimension());
  for (int i = 0; i < dimension(); ++i) w[i] = (hi[i] - lo[i]) / counts[static_cast<std::size_t>(i)];
  return w;
}

State Grid::center(std::size_t cell) const {
  const State w = width();
  State c(dimension());
  for (int i = dimension(); i-- > 0;) {
    const auto n = static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
    const std::size_t k = cell % n;
    cell /= n;
    c[i] = lo[i] + (static_cast<double>(k) + 0.5) * w[i];
  }
  return c;
}

double Grid::volume(std::size_t) const { return width().prod(); }

std::size_t Grid::locate(const State& x) const {
  std::size_t cell = 0;
  for (int i = 0; i < dimension(); ++i) {
    const int n = counts[static_cast<std::size_t>(i)];
    const double u = (x[i] - lo[i]) / (hi[i] - lo[i]) * n;
    int k = std::isfinite(u) ? static_cast<int>(std::floor(u)) : (u > 0 ? n - 1 : 0);
    k = std::clamp(k, 0, n - 1);
    cell = cell * static_cast<std::size_t>(n) + static_cast<std::size_t>(k);
  }
  return cell;
}

bool Grid::operator==(const Grid& other) const {
  return counts == other.counts && lo == other.lo && hi == other.hi;
}

std::vector<Eigen::Index> DiscretizedKernel::positions(const CellSet& cells) const {
  std::vector<Eigen::Index> out;
  out.reserve(cells.size());
  for (std::size_t c : cells) {
    const auto it = std::lower_bound(states.begin(), states.end(), c);
    if (it == states.end() || *it != c) {
      throw Error(ErrorCode::InvalidArgument, "cell " + std::to_string(c) + " not carried by the kernel");
    }
    out.push_back(static_cast<Eigen::Index>(it - states.begin()));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Eigen::Index> DiscretizedKernel::complement_positions(const CellSet& cells) const {
  std::vector<bool> in(size(), false);
  for (Eigen::Index p : positions(cells)) in[static_cast<std::size_t>(p)] = true;
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!in[i]) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

DiscretizedKernel DiscretizedKernel::from_matrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw Error(ErrorCode::InvalidArgument, "kernel matrix must be square");
  DiscretizedKernel K;
  K.grid = Grid::unit(static_cast<int>(m.rows()));
  K.states.resize(static_cast<std::size_t>(m.rows()));
  for (std::size_t i = 0; i < K.states.size(); ++i) K.states[i] = i;
  K.matrix = m;
  const Eigen::VectorXd lost = Eigen::VectorXd::Ones(m.rows()) - m.rowwise().sum();
  if (lost.cwiseAbs().maxCoeff() > 1e-12) K.kill_column = lost.cwiseMax(0.0);
  return K;
}

Grid section_grid(const SdeModel& model, const std::vector<int>& counts) {
  return Grid::uniform(model.primary.box_lo, model.primary.box_hi, counts);
}

CrossingChain sample_chain(const SdeModel& model, const State& x0, int steps, double dt, std::uint64_t seed,
                           double max_return_time) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "steps must be positive");
  Rng rng = make_rng(seed);
  CrossingChain chain;
  State x = x0;
  double t = 0.0;
  for (int n = 0; n < steps; ++n) {
    const LegResult leg = simulate_leg(model, x, dt, max_return_time, rng);
    if (leg.status == LegStatus::Timeout) {
      throw Error(ErrorCode::Timeout, "no return within " + std::to_string(max_return_time) + " time units");
    }
    if (leg.status == LegStatus::Killed) {
      chain.killed_at = chain.points.size();
      break;
    }
    t += leg.time;
    x = leg.point;
    chain.points.push_back(x);
    chain.crossing_times.push_back(t);
  }
  return chain;
}

DiscretizedKernel build_kernel(const SdeModel& model, const Grid& grid, int samples_per_cell, double dt,
                               std::uint64_t seed, const BuildOptions& options) {
  if (samples_per_cell < 100) throw Error(ErrorCode::InvalidArgument, "samples_per_cell must be at least 100");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  const std::size_t n = grid.size();
  const int min_row = std::min(options.min_row_samples, samples_per_cell);
  const bool killing = model.confinement == Confinement::KilledB;

  DiscretizedKernel K;
  K.grid = grid;
  K.sigma = model.sigma;
  K.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) K.states[i] = i;
  K.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd killed = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  K.sample_counts.assign(n, 0);

  auto build_row = [&](std::size_t cell) {
    Rng rng = make_rng(seed, cell);
    const State x0 = grid.center(cell);
    std::vector<int> hits(n, 0);
    int lost = 0;
    int returned = 0;
    for (int s = 0; s < samples_per_cell; ++s) {
      const LegResult leg = simulate_leg(model, x0, dt, options.max_return_time, rng);
      if (leg.status == LegStatus::Returned) {
        ++hits[grid.locate(leg.point)];
        ++returned;
      } else if (leg.status == LegStatus::Killed) {
        ++lost;
      }
    }
    const int total = returned + lost;
    if (total < min_row) {
      throw Error(ErrorCode::EmptyRow, "cell " + std::to_string(cell) + " has " + std::to_string(total) +
                                           " completed samples");
    }
    const auto r = static_cast<Eigen::Index>(cell);
    for (std::size_t j = 0; j < n; ++j) {
      if (hits[j] > 0) K.matrix(r, static_cast<Eigen::Index>(j)) = static_cast<double>(hits[j]) / total;
    }
    killed[r] = static_cast<double>(lost) / total;
    K.sample_counts[cell] = total;
  };

  unsigned workers = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) build_row(i);
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) build_row(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  if (killing) K.kill_column = killed;
  return K;
}

DiscretizedKernel iterate_kernel(const DiscretizedKernel& K, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "iteration count must be positive");
  DiscretizedKernel out = K;
  for (int i = 1; i < n; ++i) out.matrix = out.matrix * K.matrix;
  if (K.has_kill()) {
    out.kill_column = (Eigen::VectorXd::Ones(out.matrix.rows()) - out.matrix.rowwise().sum()).cwiseMax(0.0);
  }
  return out;
}

State deterministic_return(const SdeModel& model, const State& x, double dt, double max_time, double* time) {
  const SdeModel quiet = model.with_sigma(0.0);
  Rng rng = make_rng(0);
  const LegResult leg = simulate_leg(quiet, x, dt, max_time, rng);
  if (leg.status == LegStatus::Timeout) throw Error(ErrorCode::Timeout, "deterministic orbit does not return");
  if (leg.status == LegStatus::Killed) throw Error(ErrorCode::NonReturning, "deterministic orbit leaves the domain");
  if (time != nullptr) *time = leg.time;
  return leg.point;
}

}  // namespace rpmap

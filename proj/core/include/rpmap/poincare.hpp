#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "rpmap/sde.hpp"

namespace rpmap {

/// Uniform axis-aligned partition of a chart box. Cells are numbered
/// row-major with the first axis varying slowest.
struct Grid {
  State lo;
  State hi;
  std::vector<int> counts;

  static Grid uniform(const State& lo, const State& hi, const std::vector<int>& counts);
  /// n unit cells on [0, n]; the carrier of hand-written toy kernels.
  static Grid unit(int n);

  int dimension() const { return static_cast<int>(counts.size()); }
  std::size_t size() const;
  State center(std::size_t cell) const;
  State width() const;
  double volume(std::size_t cell) const;
  /// Cell containing x; points outside the box are clamped to the nearest
  /// boundary cell.
  std::size_t locate(const State& x) const;

  bool operator==(const Grid& other) const;
};

/// Sets of grid cells are plain sorted index lists.
using CellSet = std::vector<std::size_t>;

/// Row-(sub)stochastic matrix on a subset of grid cells. `states[i]` is the
/// grid cell carried by row and column i; killed and trace kernels keep the
/// grid of the kernel they were derived from.
struct DiscretizedKernel {
  Grid grid;
  std::vector<std::size_t> states;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd kill_column;  // empty when no mass is ever lost
  std::vector<int> sample_counts;
  double sigma = 0.0;

  std::size_t size() const { return states.size(); }
  bool has_kill() const { return kill_column.size() > 0; }

  /// Positions of the given grid cells among `states`. Throws
  /// InvalidArgument for a cell the kernel does not carry.
  std::vector<Eigen::Index> positions(const CellSet& cells) const;
  /// Positions of the carried cells that are not in `cells`.
  std::vector<Eigen::Index> complement_positions(const CellSet& cells) const;

  /// Kernel over Grid::unit(n) with every state carried.
  static DiscretizedKernel from_matrix(const Eigen::MatrixXd& m);
};

struct BuildOptions {
  double max_return_time = 100.0;
  int min_row_samples = 1000;  // capped at samples_per_cell
  unsigned threads = 0;        // 0: hardware concurrency
};

CrossingChain sample_chain(const SdeModel& model, const State& x0, int steps, double dt,
                           std::uint64_t seed, double max_return_time = 100.0);

DiscretizedKernel build_kernel(const SdeModel& model, const Grid& grid, int samples_per_cell, double dt,
                               std::uint64_t seed, const BuildOptions& options = {});

DiscretizedKernel iterate_kernel(const DiscretizedKernel& K, int n);

/// Noise-free return map evaluated at chart point x; sets `time` to the return
/// time. Throws Timeout or NonReturning (domain exit in variant B).
State deterministic_return(const SdeModel& model, const State& x, double dt, double max_time,
                           double* time = nullptr);

/// Grid over the primary chart box of a model.
Grid section_grid(const SdeModel& model, const std::vector<int>& counts);

}  // namespace rpmap

#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "rpmap/markov.hpp"
#include "rpmap/poincare.hpp"

namespace {

using namespace rpmap;

// Kernel rows for a small grid: cost is dominated by Euler-Maruyama returns.
void BM_BuildKernel(benchmark::State& state) {
  const SdeModel m = reference_model(1.0, 0.1);
  const Grid g = section_grid(m, {static_cast<int>(state.range(0))});
  BuildOptions opt;
  opt.threads = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_kernel(m, g, 200, 0.01, 1, opt));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * 200);
}
BENCHMARK(BM_BuildKernel)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

Eigen::MatrixXd random_stochastic(Eigen::Index n) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = u(gen) * std::exp(-std::abs(double(i - j)));
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

void BM_SpectralDecomposition(benchmark::State& state) {
  const Eigen::MatrixXd m = random_stochastic(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spectral_decomposition(m, 3));
}
BENCHMARK(BM_SpectralDecomposition)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Trace(benchmark::State& state) {
  const DiscretizedKernel K = DiscretizedKernel::from_matrix(random_stochastic(state.range(0)));
  CellSet A;
  for (std::size_t c = 0; c < K.size(); c += 4) A.push_back(c);
  for (auto _ : state) benchmark::DoNotOptimize(trace(K, A));
}
BENCHMARK(BM_Trace)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Qsd(benchmark::State& state) {
  const DiscretizedKernel K = DiscretizedKernel::from_matrix(random_stochastic(state.range(0)));
  CellSet keep;
  for (std::size_t c = 1; c < K.size(); ++c) keep.push_back(c);
  const DiscretizedKernel KA = kill(K, keep);
  for (auto _ : state) benchmark::DoNotOptimize(qsd(KA));
}
BENCHMARK(BM_Qsd)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

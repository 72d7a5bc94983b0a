#include <cmath>
#include <random>

#include <benchmark/benchmark.h>

#include "widesdf/feature_learning.hpp"
#include "widesdf/kernel_core.hpp"
#include "widesdf/ptk.hpp"
#include "widesdf/sdf_solver.hpp"
#include "widesdf/synth.hpp"

using namespace widesdf;

namespace {

Eigen::MatrixXd inputs(Eigen::Index n, Eigen::Index d) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
  return X;
}

PanelDataset panel(int T, int N, int d) {
  SynthSpec s;
  s.num_assets = N;
  s.num_periods = T;
  s.num_characteristics = d;
  return synth_panel(s, 2);
}

void BM_KernelBlock(benchmark::State& state) {
  const auto depth = static_cast<int>(state.range(0));
  const Eigen::MatrixXd X = inputs(state.range(1), 20);
  const ArchitectureSpec arch = ArchitectureSpec::flat(depth, 20, Activation::ReLU);
  for (auto _ : state) benchmark::DoNotOptimize(kernel_block(X, X, arch, KernelType::NTK));
  state.SetItemsProcessed(state.iterations() * state.range(1) * state.range(1));
}
BENCHMARK(BM_KernelBlock)->Args({1, 100})->Args({8, 100})->Args({64, 100})->Args({8, 400});

void BM_AssembleIsKernel(benchmark::State& state) {
  const PanelDataset p = panel(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 20);
  const ArchitectureSpec arch = ArchitectureSpec::flat(4, 20, Activation::ReLU);
  const ChunkPlan plan = ChunkPlan::whole_blocks(p);
  for (auto _ : state) {
    benchmark::DoNotOptimize(assemble_is_kernel(p, arch, KernelType::NTK, {}, plan));
  }
}
BENCHMARK(BM_AssembleIsKernel)->Args({12, 100})->Args({24, 100})->Unit(benchmark::kMillisecond);

void BM_SpectralSweep(benchmark::State& state) {
  const PanelDataset p = panel(static_cast<int>(state.range(0)), 50, 10);
  const KernelMatrix K = assemble_is_kernel(p, ArchitectureSpec::flat(2, 10, Activation::ReLU),
                                            KernelType::NTK, {}, ChunkPlan::whole_blocks(p));
  for (auto _ : state) {
    const SpectralSolver solver(K);
    for (int e = -5; e <= 3; ++e) benchmark::DoNotOptimize(solver.ridge(std::pow(10.0, e)));
  }
}
BENCHMARK(BM_SpectralSweep)->Arg(60)->Arg(120);

void BM_Agop(benchmark::State& state) {
  const PanelDataset p = panel(12, static_cast<int>(state.range(0)), 10);
  SdfWeights xi;
  xi.xi = Eigen::VectorXd::Ones(12);
  const MetricMatrix M = MetricMatrix::identity(10);
  const RadialProfile g = RadialProfile::gaussian(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(agop(p, xi, M, g));
}
BENCHMARK(BM_Agop)->Arg(30)->Arg(100);

}  // namespace

BENCHMARK_MAIN();

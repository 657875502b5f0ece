#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gil/edge_convolution.hpp"
#include "gil/gaussian.hpp"
#include "gil/lattice.hpp"
#include "gil/quadrature.hpp"
#include "gil/sampler.hpp"

using namespace gil;

namespace {

std::vector<double> random_sites(const Torus& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  std::vector<double> v(t.volume());
  for (std::size_t x = 1; x < v.size(); ++x) v[x] = n(rng);
  v[0] = 0.0;
  return v;
}

void BM_Hamiltonian(benchmark::State& state) {
  const Torus t(2, static_cast<int>(state.range(0)));
  const auto p = Potential::example_b(0.5);
  const Field f = Field::pinned(random_sites(t, 1));
  const Tilt u = Tilt::Constant(2, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(hamiltonian(t, u, f.sites(), p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.volume()));
}
BENCHMARK(BM_Hamiltonian)->Arg(8)->Arg(32)->Arg(128);

void BM_GradH(benchmark::State& state) {
  const Torus t(2, static_cast<int>(state.range(0)));
  const auto p = Potential::example_b(0.5);
  const Field f = Field::pinned(random_sites(t, 2));
  const Tilt u = Tilt::Constant(2, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(grad_H(t, u, f.sites(), p));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(t.volume()));
}
BENCHMARK(BM_GradH)->Arg(8)->Arg(32)->Arg(128);

void BM_MalaSteps(benchmark::State& state) {
  const Torus t(2, static_cast<int>(state.range(0)));
  const auto target = gibbs_target(t, Tilt::Constant(2, 0.1), Potential::example_b(0.5), 1.0);
  ChainConfig cfg;
  cfg.n_steps = 1000;
  cfg.burn_in = 0;
  cfg.adapt = false;
  cfg.enforce_acceptance = false;
  const Eigen::VectorXd start = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(t.dof()));
  for (auto _ : state) {
    run_chain(target, start, cfg, 0, [](const Eigen::VectorXd& s) { benchmark::DoNotOptimize(s.data()); });
  }
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_MalaSteps)->Arg(4)->Arg(16);

void BM_GffSample(benchmark::State& state) {
  const Torus t(2, static_cast<int>(state.range(0)));
  const SpectralCovariance sc(t);
  std::mt19937_64 rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(sc.sample(1.0, rng));
}
BENCHMARK(BM_GffSample)->Arg(16)->Arg(64)->Arg(256);

void BM_GaussHermiteLogZ(benchmark::State& state) {
  const Torus t(2, 2);
  QuadratureSpec q;
  q.rule = QuadratureRule::GaussHermite;
  for (auto _ : state)
    benchmark::DoNotOptimize(log_partition(Tilt::Constant(2, 0.2), Potential::example_a(0.5), t, 1.0, q).value);
}
BENCHMARK(BM_GaussHermiteLogZ)->Unit(benchmark::kMillisecond);

void BM_EdgeConvolution(benchmark::State& state) {
  const auto grid = ConvolutionGrid::make(8.0 / static_cast<double>(state.range(0)), 8.0);
  std::vector<NegLogKernel> ks(6, [](double e) { return 0.5 * e * e + 0.1 * e * e * e * e; });
  for (auto _ : state) benchmark::DoNotOptimize(log_constrained_integral(ks, grid));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EdgeConvolution)->Arg(256)->Arg(4096)->Arg(65536)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

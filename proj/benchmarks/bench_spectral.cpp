#include <benchmark/benchmark.h>

#include <complex>
#include <random>
#include <vector>

#include "hypercauchy/causal.hpp"
#include "hypercauchy/evolve.hpp"
#include "hypercauchy/grid.hpp"
#include "hypercauchy/system.hpp"

namespace {

using namespace hypercauchy;

Field random_field(int modes, std::uint64_t seed) {
  const GridSpec spec{1, modes, 1, ScalarKind::real_valued};
  Field f(spec);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int xi = 1; xi <= 8; ++xi) {
    const std::complex<double> v(dist(gen), dist(gen));
    f.set_mode(0, xi, v);
    f.set_mode(0, -xi, std::conj(v));
  }
  f.set_mode(0, 0, dist(gen));
  return f;
}

void bm_product(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  const Field a = random_field(modes, 11);
  const Field b = random_field(modes, 13);
  for (auto _ : state) benchmark::DoNotOptimize(product(a, b));
}
BENCHMARK(bm_product)->Arg(64)->Arg(256);

void bm_mollify(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  const Field f = random_field(modes, 17);
  const Mollifier m(0.03125);
  for (auto _ : state) benchmark::DoNotOptimize(mollify(f, m));
}
BENCHMARK(bm_mollify)->Arg(64)->Arg(256);

void bm_sobolev_norm(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  const Field f = random_field(modes, 19);
  for (auto _ : state) benchmark::DoNotOptimize(sobolev_norm(f, 4));
}
BENCHMARK(bm_sobolev_norm)->Arg(64)->Arg(256);

void bm_node_roundtrip(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  const Field f = random_field(modes, 23);
  const int pad = dealias_modes(modes);
  for (auto _ : state) {
    std::vector<cdouble> nodes = padded_nodes(f, pad);
    benchmark::DoNotOptimize(
        field_from_padded_nodes(f.spec(), pad, nodes));
  }
}
BENCHMARK(bm_node_roundtrip)->Arg(64)->Arg(256);

void bm_integrate_burgers(benchmark::State& state) {
  const int modes = static_cast<int>(state.range(0));
  const HyperbolicSystem sys = make_burgers_system();
  const Field f = random_field(modes, 29);
  SolveControls ctl;
  ctl.c1_breakdown_threshold = 1e300;
  for (auto _ : state)
    benchmark::DoNotOptimize(integrate(sys, f, Mollifier(), 0.1, ctl));
}
BENCHMARK(bm_integrate_burgers)->Arg(64)->Arg(256);

void bm_causal_plan(benchmark::State& state) {
  std::vector<double> radii(51);
  for (std::size_t k = 0; k < radii.size(); ++k)
    radii[k] = static_cast<double>(k + 1);
  for (auto _ : state) {
    CausalPlan p = plan(radii, -1.0, 50);
    benchmark::DoNotOptimize(verify_separation(p));
    benchmark::DoNotOptimize(verify_stabilization(p));
  }
}
BENCHMARK(bm_causal_plan);

}  // namespace

BENCHMARK_MAIN();

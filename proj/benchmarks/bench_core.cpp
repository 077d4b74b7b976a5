#include <benchmark/benchmark.h>

#include "langcert/certificate.hpp"
#include "langcert/dynamics.hpp"
#include "langcert/gamma.hpp"
#include "langcert/potential.hpp"
#include "langcert/rng.hpp"

using namespace langcert;

namespace {

PotentialModel make_pair(int n) {
  SingularPairParams p;
  p.n_particles = n;
  p.k_dim = 3;
  p.well_exponent = 2;
  p.pair_exponent = 6;
  return PotentialModel::singular_pair(p);
}

std::vector<double> lattice(const PotentialModel& m) {
  return domain_anchor(m).x;
}

void BM_PairForce(benchmark::State& state) {
  const auto model = make_pair(static_cast<int>(state.range(0)));
  const auto x = lattice(model);
  for (auto _ : state) benchmark::DoNotOptimize(model.gradient(x));
  state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) - 1) / 2);
}
BENCHMARK(BM_PairForce)->Arg(4)->Arg(16)->Arg(64);

void BM_PairHessianVec(benchmark::State& state) {
  const auto model = make_pair(static_cast<int>(state.range(0)));
  const auto x = lattice(model);
  std::vector<double> y(x.size(), 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(model.hessian_vec(x, y));
}
BENCHMARK(BM_PairHessianVec)->Arg(4)->Arg(16)->Arg(64);

void BM_BaoabStep(benchmark::State& state) {
  const auto model = make_pair(static_cast<int>(state.range(0)));
  ModelParams mp;
  mp.n_particles = model.n_particles();
  mp.k_dim = 3;
  SimConfig cfg;
  cfg.dt = 1e-3;
  CounterRng rng(1, 1);
  PhasePoint p = domain_anchor(model);
  for (auto _ : state) {
    auto next = step(model, mp, cfg, p, rng);
    if (next) p = std::move(*next);
    benchmark::DoNotOptimize(p.x[0]);
  }
}
BENCHMARK(BM_BaoabStep)->Arg(4)->Arg(16)->Arg(64);

void BM_Gamma2Closed(benchmark::State& state) {
  const auto model = PotentialModel::double_well(1, 2);
  ModelParams mp;
  mp.n_particles = 1;
  mp.k_dim = 2;
  GammaEngine engine(model, mp);
  const auto fields = standard_test_fields(2);
  PhasePoint p{{0.3, -0.2}, {0.5, 0.1}};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        engine.gamma2_closed_form(GammaEngine::Direction::kZ, fields[5], p));
}
BENCHMARK(BM_Gamma2Closed);

void BM_MetropolisSweep(benchmark::State& state) {
  const auto model = make_pair(8);
  ModelParams mp;
  mp.n_particles = 8;
  mp.k_dim = 3;
  SimConfig cfg;
  cfg.burn_in = 0;
  cfg.thinning = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_position_marginal(model, mp, cfg, 64));
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MetropolisSweep);

}  // namespace

BENCHMARK_MAIN();

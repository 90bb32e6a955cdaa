#include <benchmark/benchmark.h>

#include "stadr/gmrf.hpp"
#include "stadr/harness.hpp"
#include "stadr/spacetime.hpp"

namespace {

using namespace stadr;

// Square interior of side n with a 4-cell buffer and 10 time steps.
GridSpec grid_for(int n) { return build_grid({0, 15, 0, 15}, n, n, 4, 10, 1.0); }

void BM_AssemblePrecision(benchmark::State& state) {
  const GridSpec g = grid_for(static_cast<int>(state.range(0)));
  const auto fields = true_model_fields(g);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_precision(g, fields).q.nonZeros());
  state.counters["latent"] = static_cast<double>(g.latent_size());
}
BENCHMARK(BM_AssemblePrecision)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_FactorizeFresh(benchmark::State& state) {
  const GridSpec g = grid_for(static_cast<int>(state.range(0)));
  const SparseMatrix q = assemble_precision(g, true_model_fields(g)).q;
  for (auto _ : state) {
    SparseCholesky chol(q);
    benchmark::DoNotOptimize(chol.log_det());
  }
  state.counters["latent"] = static_cast<double>(g.latent_size());
}
BENCHMARK(BM_FactorizeFresh)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

// Numeric refactorization with the symbolic analysis already in place.
void BM_FactorizeReused(benchmark::State& state) {
  const GridSpec g = grid_for(static_cast<int>(state.range(0)));
  const SparseMatrix q = assemble_precision(g, true_model_fields(g)).q;
  SparseCholesky chol(q);
  for (auto _ : state) {
    chol.factorize(q);
    benchmark::DoNotOptimize(chol.log_det());
  }
}
BENCHMARK(BM_FactorizeReused)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_Sample(benchmark::State& state) {
  const GridSpec g = grid_for(static_cast<int>(state.range(0)));
  SparseCholesky chol(assemble_precision(g, true_model_fields(g)).q);
  RandomStream rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(chol.sample(rng).sum());
}
BENCHMARK(BM_Sample)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

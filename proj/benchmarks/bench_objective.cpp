#include <benchmark/benchmark.h>

#include "stadr/harness.hpp"
#include "stadr/inference.hpp"

namespace {

using namespace stadr;

// One gradient evaluation of the log-posterior for NStat-AD (3 basis
// functions per axis) on a square interior of side n with every interior
// cell observed at every time and 4 replicates.
void BM_ObjectiveGradient(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const GridSpec g = build_grid({0, 15, 0, 15}, side, side, 4, 10, 1.0);
  const auto draws = simulate_replicates(g, true_model_fields(g), 4, 0.01, 3, 1, 1);
  std::vector<int> idx;
  for (int k = 0; k < g.num_times(); ++k)
    for (int c : interior_cells(g)) idx.push_back(k * g.num_cells() + c);
  Dataset data;
  data.design = ObservationDesign(static_cast<Eigen::Index>(g.latent_size()), idx);
  for (const auto& z : draws) data.replicates.push_back(data.design.apply(z));
  Objective objective(g, ModelKind::NStatAD, 3, data);
  const ModelParameters p = ModelParameters::initial(ModelKind::NStatAD, 3);
  GradientOptions options;
  options.num_probes = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(objective.evaluate(p, options).value);
}
BENCHMARK(BM_ObjectiveGradient)->Args({10, 1})->Args({20, 1})->Args({20, 4})->Unit(benchmark::kMillisecond);

}  // namespace

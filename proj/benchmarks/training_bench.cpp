#include <benchmark/benchmark.h>

#include "cnode/trainer.hpp"

namespace {

using namespace cnode;

// One self-adaptive iteration with a backward pass (the accepted-candidate
// path), per system preset on its reconstruction task.
void BM_ObjectiveAndGradient(benchmark::State& state) {
  ExperimentConfig config;
  config.system = static_cast<SystemKind>(state.range(0));
  const TrainingProblem problem = TrainingProblem::from_config(config);
  const auto theta = init_params(problem.net, 1);
  for (auto _ : state) {
    ObjectiveTape tape(problem, theta, LossRegime::self_adaptive());
    benchmark::DoNotOptimize(tape.gradient());
  }
  state.SetLabel(to_string(config.system));
}
BENCHMARK(BM_ObjectiveAndGradient)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_ObjectiveOnly(benchmark::State& state) {
  ExperimentConfig config;
  config.system = static_cast<SystemKind>(state.range(0));
  const TrainingProblem problem = TrainingProblem::from_config(config);
  const auto theta = init_params(problem.net, 1);
  for (auto _ : state) {
    ObjectiveTape tape(problem, theta, LossRegime::self_adaptive());
    benchmark::DoNotOptimize(tape.value());
  }
  state.SetLabel(to_string(config.system));
}
BENCHMARK(BM_ObjectiveOnly)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

}  // namespace

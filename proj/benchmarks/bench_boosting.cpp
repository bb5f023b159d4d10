#include <benchmark/benchmark.h>

#include <algorithm>
#include <string>
#include <vector>

#include "posthoc/boosting.hpp"
#include "posthoc/rng.hpp"

using namespace posthoc;

namespace {

// Synthetic regression problem: linear signal in the first three features
// plus noise, remaining features pure distractors.
struct Problem {
  FeatureMatrix x;
  std::vector<double> y;
};

Problem make_problem(std::size_t rows, std::size_t dim) {
  Rng rng(7);
  Problem problem;
  for (std::size_t d = 0; d < dim; ++d) {
    problem.x.names.push_back("f" + std::to_string(d));
  }
  problem.x.rows.reserve(rows);
  problem.y.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> row(dim);
    for (auto& value : row) value = rng.next_unit();
    double target = 0.2 + 0.3 * row[0] + 0.2 * row[1 % dim] -
                    0.1 * row[2 % dim] + rng.normal(0.0, 0.05);
    problem.x.rows.push_back(std::move(row));
    problem.y.push_back(std::clamp(target, 0.0, 1.0));
  }
  return problem;
}

}  // namespace

static void bm_train_boosted_regressor(benchmark::State& state) {
  const auto problem =
      make_problem(static_cast<std::size_t>(state.range(0)), 11);
  BoostConfig config;
  config.rounds = 50;
  config.max_depth = 5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train_boosted_regressor(problem.x, problem.y, config));
  }
}
BENCHMARK(bm_train_boosted_regressor)->Arg(500)->Arg(2000)
    ->Unit(benchmark::kMillisecond);

static void bm_boost_predict(benchmark::State& state) {
  const auto problem =
      make_problem(static_cast<std::size_t>(state.range(0)), 11);
  BoostConfig config;
  config.rounds = 300;
  const auto model = train_boosted_regressor(problem.x, problem.y, config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(problem.x));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(problem.x.size()));
}
BENCHMARK(bm_boost_predict)->Arg(2000)->Unit(benchmark::kMillisecond);

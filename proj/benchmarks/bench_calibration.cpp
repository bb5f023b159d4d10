#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "posthoc/calibration.hpp"
#include "posthoc/rng.hpp"

using namespace posthoc;

namespace {

struct Paired {
  std::vector<double> predicted;
  std::vector<double> truth;
};

Paired make_pairs(std::size_t n) {
  Rng rng(11);
  Paired out;
  out.predicted.reserve(n);
  out.truth.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = rng.next_unit();
    out.predicted.push_back(p);
    out.truth.push_back(std::clamp(p + rng.normal(0.0, 0.1), 0.0, 1.0));
  }
  return out;
}

}  // namespace

static void bm_expected_calibration_error(benchmark::State& state) {
  const auto pairs = make_pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        expected_calibration_error(pairs.predicted, pairs.truth, 10));
  }
}
BENCHMARK(bm_expected_calibration_error)->Arg(1000)->Arg(100000);

static void bm_spearman(benchmark::State& state) {
  const auto pairs = make_pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(spearman(pairs.predicted, pairs.truth));
  }
}
BENCHMARK(bm_spearman)->Arg(1000)->Arg(100000);

static void bm_make_report(benchmark::State& state) {
  const auto pairs = make_pairs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_report(pairs.predicted, pairs.truth, 10));
  }
}
BENCHMARK(bm_make_report)->Arg(1000)->Arg(100000);

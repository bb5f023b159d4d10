#include <benchmark/benchmark.h>

#include "posthoc/metrics.hpp"
#include "posthoc/synthetic.hpp"

using namespace posthoc;

namespace {

Corpus detection_corpus(int num_images, int max_objects) {
  SyntheticConfig config;
  config.task = Task::detection;
  config.num_images = num_images;
  config.num_classes = 8;
  config.min_objects = 1;
  config.max_objects = max_objects;
  DetectionModelSpec spec;
  spec.model_id = "m";
  spec.miss_rate = 0.2;
  spec.fp_rate = 1.0;
  spec.jitter = 0.08;
  spec.wrong_class_rate = 0.15;
  config.det_models.push_back(spec);
  return generate_synthetic(config, 1);
}

}  // namespace

static void bm_match_greedy(benchmark::State& state) {
  const auto corpus = detection_corpus(256, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    for (const auto& record : corpus.records) {
      benchmark::DoNotOptimize(
          match_greedy(record.models.at("m").dets, record.gt, 0.5));
    }
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(corpus.records.size()));
}
BENCHMARK(bm_match_greedy)->Arg(4)->Arg(12)->Arg(24);

static void bm_image_metrics(benchmark::State& state) {
  const auto corpus = detection_corpus(256, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    for (const auto& record : corpus.records) {
      benchmark::DoNotOptimize(
          image_metrics(record.models.at("m").dets, record.gt, 0.5));
    }
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(corpus.records.size()));
}
BENCHMARK(bm_image_metrics)->Arg(4)->Arg(12)->Arg(24);

BENCHMARK_MAIN();

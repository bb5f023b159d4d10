#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include <doctest.h>

#include "corpus_builders.hpp"
#include "posthoc/calibration.hpp"
#include "posthoc/data_model.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/scaling.hpp"
#include "posthoc/shift.hpp"
#include "posthoc/synthetic.hpp"

using namespace posthoc;

namespace {

Corpus classification_corpus(int num_images, std::uint64_t seed) {
  SyntheticConfig config;
  config.task = Task::classification;
  config.num_images = num_images;
  config.num_classes = 3;
  ClassificationModelSpec model;
  model.model_id = "net";
  model.distort_scale = 2.0;
  config.cls_models.push_back(model);
  return generate_synthetic(config, seed);
}

// Round-robin records with the requested number per class, no model outputs.
Corpus counted_corpus(const std::vector<int>& counts) {
  Corpus corpus;
  corpus.task = Task::classification;
  corpus.num_classes = 3;
  auto remaining = counts;
  int index = 0;
  bool any = true;
  while (any) {
    any = false;
    for (std::size_t c = 0; c < remaining.size(); ++c) {
      if (remaining[c] == 0) continue;
      --remaining[c];
      any = true;
      ImageRecord record;
      record.image_id = builders::image_name(index++);
      record.width = 32;
      record.height = 32;
      record.true_class = static_cast<int>(c);
      corpus.records.push_back(std::move(record));
    }
  }
  return corpus;
}

std::vector<int> class_counts(const Corpus& corpus) {
  std::vector<int> counts(static_cast<std::size_t>(corpus.num_classes), 0);
  for (const auto& record : corpus.records) {
    counts[static_cast<std::size_t>(record.true_class)] += 1;
  }
  return counts;
}

std::vector<std::string> ids_of(const Corpus& corpus) {
  std::vector<std::string> ids;
  for (const auto& record : corpus.records) ids.push_back(record.image_id);
  return ids;
}

ShiftOptions quick_options() {
  ShiftOptions options;
  options.num_bins = 8;
  options.boost.rounds = 40;
  options.boost.max_depth = 3;
  options.mlp.epochs = 40;
  return options;
}

std::size_t argmax_of(const std::vector<double>& values) {
  return static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
}

}  // namespace

TEST_CASE("dataset shift run exposes consistent per-method results") {
  const auto corpus = assign_splits(classification_corpus(400, 91),
                                    SplitFractions{0.25, 0.4, 0.35}, 92);
  const auto options = quick_options();
  const auto result = run_dataset_shift(corpus, "net", options);
  const auto test = split_subset(corpus, Split::test);
  const auto n = test.records.size();

  SUBCASE("truth is the calibrated argmax correctness in test order") {
    REQUIRE(result.image_ids.size() == n);
    REQUIRE(result.truth.size() == n);
    bool saw_right = false;
    bool saw_wrong = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& record = test.records[i];
      CHECK(result.image_ids[i] == record.image_id);
      const auto calibrated =
          result.calibrator.apply(record.models.at("net").logits);
      const double expected =
          static_cast<int>(argmax_of(calibrated)) == record.true_class ? 1.0
                                                                       : 0.0;
      CHECK(result.truth[i] == expected);
      (expected == 1.0 ? saw_right : saw_wrong) = true;
    }
    CHECK(saw_right);
    CHECK(saw_wrong);
  }

  SUBCASE("the confidence baseline is the calibrated max probability") {
    REQUIRE(result.confidence.predicted.size() == n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto probs = softmax(
          result.calibrator.apply(test.records[i].models.at("net").logits));
      CHECK(result.confidence.predicted[i] ==
            *std::max_element(probs.begin(), probs.end()));
    }
  }

  SUBCASE("reports and histograms are recomputable from the predictions") {
    for (const auto* method : {&result.confidence, &result.boost, &result.mlp}) {
      REQUIRE(method->predicted.size() == n);
      const auto report =
          make_report(method->predicted, result.truth, options.num_bins);
      CHECK(method->report.ece == report.ece);
      CHECK(method->report.spearman == report.spearman);

      const auto& histogram = method->histogram;
      CHECK(histogram.num_bins == options.num_bins);
      REQUIRE(histogram.correct.size() ==
              static_cast<std::size_t>(options.num_bins));
      REQUIRE(histogram.incorrect.size() ==
              static_cast<std::size_t>(options.num_bins));
      std::vector<std::size_t> correct(histogram.correct.size(), 0);
      std::vector<std::size_t> incorrect(histogram.incorrect.size(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto bin = bin_index(method->predicted[i], options.num_bins);
        (result.truth[i] >= 0.5 ? correct : incorrect)[bin] += 1;
      }
      CHECK(histogram.correct == correct);
      CHECK(histogram.incorrect == incorrect);
    }
  }

  SUBCASE("reruns are bitwise identical") {
    const auto again = run_dataset_shift(corpus, "net", options);
    CHECK(again.calibrator.weights == result.calibrator.weights);
    CHECK(again.calibrator.bias == result.calibrator.bias);
    CHECK(again.truth == result.truth);
    CHECK(again.confidence.predicted == result.confidence.predicted);
    CHECK(again.boost.predicted == result.boost.predicted);
    CHECK(again.mlp.predicted == result.mlp.predicted);
  }
}

TEST_CASE("dataset shift validates its inputs") {
  Corpus detection;
  detection.task = Task::detection;
  CHECK_THROWS_AS(run_dataset_shift(detection, "net", quick_options()),
                  ValidationError);

  auto options = quick_options();
  options.num_bins = 0;
  Corpus bare;
  bare.task = Task::classification;
  CHECK_THROWS_AS(run_dataset_shift(bare, "net", options), ValidationError);

  const auto unsplit = classification_corpus(40, 93);
  CHECK_THROWS_AS(run_dataset_shift(unsplit, "net", quick_options()),
                  ValidationError);

  const auto no_test =
      assign_splits(unsplit, SplitFractions{0.5, 0.5, 0.0}, 94);
  CHECK_THROWS_AS(run_dataset_shift(no_test, "net", quick_options()),
                  ValidationError);
}

TEST_CASE("resample_shift follows the requested frequencies") {
  const auto corpus = counted_corpus({90, 60, 30});

  SUBCASE("the scarcest class keeps everything, the rest scale down") {
    // ratios available/frequency are 30, 20, 30: class 1 is the pivot
    const auto shifted = resample_shift(corpus, {0, 1, 2}, {3.0, 3.0, 1.0}, 95);
    CHECK(class_counts(shifted) == std::vector<int>{60, 60, 20});
    CHECK(shifted.num_classes == 3);
  }

  SUBCASE("dropped classes vanish while num_classes stays put") {
    const auto shifted = resample_shift(corpus, {0, 2}, {1.0, 1.0}, 96);
    CHECK(class_counts(shifted) == std::vector<int>{30, 0, 30});
    CHECK(shifted.num_classes == 3);
  }

  SUBCASE("corpus order is preserved") {
    const auto shifted = resample_shift(corpus, {0, 1, 2}, {3.0, 3.0, 1.0}, 97);
    const auto ids = ids_of(shifted);
    // zero-padded names make lexicographic order match generation order
    CHECK(std::is_sorted(ids.begin(), ids.end()));
    CHECK(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
  }

  SUBCASE("split assignments survive the resample") {
    const auto split =
        assign_splits(corpus, SplitFractions{0.25, 0.4, 0.35}, 98);
    const auto shifted = resample_shift(split, {0, 1, 2}, {3.0, 3.0, 1.0}, 99);
    CHECK(shifted.splits.size() == shifted.records.size());
    for (const auto& record : shifted.records) {
      CHECK(shifted.splits.at(record.image_id) ==
            split.splits.at(record.image_id));
    }
  }

  SUBCASE("subsampling is seeded and scale invariant in the frequencies") {
    const auto first = ids_of(resample_shift(corpus, {0, 1, 2},
                                             {3.0, 3.0, 1.0}, 100));
    const auto same = ids_of(resample_shift(corpus, {0, 1, 2},
                                            {3.0, 3.0, 1.0}, 100));
    const auto scaled = ids_of(resample_shift(corpus, {0, 1, 2},
                                              {6.0, 6.0, 2.0}, 100));
    const auto other = ids_of(resample_shift(corpus, {0, 1, 2},
                                             {3.0, 3.0, 1.0}, 101));
    CHECK(first == same);
    CHECK(first == scaled);
    CHECK(first != other);
  }

  SUBCASE("invalid requests are rejected") {
    Corpus detection;
    detection.task = Task::detection;
    CHECK_THROWS_AS(resample_shift(detection, {0}, {1.0}, 102),
                    ValidationError);
    CHECK_THROWS_AS(resample_shift(corpus, {}, {}, 102), ValidationError);
    CHECK_THROWS_AS(resample_shift(corpus, {0, 1}, {1.0}, 102),
                    ValidationError);
    CHECK_THROWS_AS(resample_shift(corpus, {3}, {1.0}, 102), ValidationError);
    CHECK_THROWS_AS(resample_shift(corpus, {-1}, {1.0}, 102), ValidationError);
    CHECK_THROWS_AS(resample_shift(corpus, {0, 0}, {1.0, 1.0}, 102),
                    ValidationError);
    CHECK_THROWS_AS(resample_shift(corpus, {0}, {0.0}, 102), ValidationError);
    CHECK_THROWS_AS(resample_shift(corpus, {0}, {-2.0}, 102), ValidationError);
    const auto sparse = counted_corpus({4, 4, 0});
    CHECK_THROWS_AS(resample_shift(sparse, {0, 2}, {1.0, 1.0}, 102),
                    ValidationError);
  }
}

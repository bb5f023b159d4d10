#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "posthoc/data_model.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/model_io.hpp"
#include "posthoc/pipeline.hpp"
#include "posthoc/synthetic.hpp"

using namespace posthoc;

namespace {

Corpus detection_corpus(int num_images, std::uint64_t seed) {
  SyntheticConfig config;
  config.task = Task::detection;
  config.num_images = num_images;
  config.num_classes = 4;
  config.min_objects = 2;
  config.max_objects = 6;
  DetectionModelSpec model;
  model.model_id = "det";
  model.f1_link = F1LinkSpec{};
  config.det_models.push_back(model);
  const auto corpus = generate_synthetic(config, seed);
  return assign_splits(corpus, SplitFractions{0.25, 0.4, 0.35}, seed + 1);
}

Corpus classification_corpus(int num_images, std::uint64_t seed) {
  SyntheticConfig config;
  config.task = Task::classification;
  config.num_images = num_images;
  config.num_classes = 3;
  ClassificationModelSpec model;
  model.model_id = "net";
  model.distort_scale = 2.0;
  config.cls_models.push_back(model);
  const auto corpus = generate_synthetic(config, seed);
  return assign_splits(corpus, SplitFractions{0.25, 0.4, 0.35}, seed + 1);
}

PredictorOptions small_options(EstimatorKind kind,
                               MetricKind metric = MetricKind::f1) {
  PredictorOptions options;
  options.estimator = kind;
  options.metric = metric;
  options.boost.rounds = 40;
  options.boost.max_depth = 3;
  options.mlp.epochs = 60;
  return options;
}

void check_round_trip(const Predictor& predictor, const Corpus& corpus) {
  const auto json_text = predictor_to_json(predictor);
  const auto restored = predictor_from_json(json_text);
  CHECK(predictor_to_json(restored) == json_text);

  const auto test = split_subset(corpus, Split::test);
  const auto original = predict_scores(predictor, test);
  const auto reloaded = predict_scores(restored, test);
  REQUIRE(original.size() == reloaded.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    CHECK(original[i] == reloaded[i]);  // bitwise, not approximate
  }

  const auto path = std::filesystem::temp_directory_path() /
                    ("posthoc_model_" + to_string(predictor.kind) + ".json");
  save_predictor(predictor, path);
  const auto from_disk = load_predictor(path);
  CHECK(predictor_to_json(from_disk) == json_text);
  std::filesystem::remove(path);
}

}  // namespace

TEST_CASE("detection estimators train deterministically and stay in range") {
  const auto corpus = detection_corpus(400, 50);
  for (const auto kind :
       {EstimatorKind::boost, EstimatorKind::mlp, EstimatorKind::confidence}) {
    CAPTURE(to_string(kind));
    const auto options = small_options(kind);
    const auto predictor = train_predictor(corpus, "det", options);
    const auto test = split_subset(corpus, Split::test);
    const auto scores = predict_scores(predictor, test);
    REQUIRE(scores.size() == test.records.size());
    for (const double s : scores) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
    const auto again =
        predict_scores(train_predictor(corpus, "det", options), test);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      CHECK(scores[i] == again[i]);
    }
  }
}

TEST_CASE("detection predictors round-trip through their file format") {
  const auto corpus = detection_corpus(350, 51);
  for (const auto kind :
       {EstimatorKind::boost, EstimatorKind::mlp, EstimatorKind::confidence}) {
    CAPTURE(to_string(kind));
    check_round_trip(train_predictor(corpus, "det", small_options(kind)),
                     corpus);
  }
}

TEST_CASE("classification predictors round-trip through their file format") {
  const auto corpus = classification_corpus(350, 52);
  for (const auto kind :
       {EstimatorKind::boost, EstimatorKind::mlp, EstimatorKind::temperature,
        EstimatorKind::vector_scaling}) {
    CAPTURE(to_string(kind));
    check_round_trip(
        train_predictor(corpus, "net",
                        small_options(kind, MetricKind::accuracy)),
        corpus);
  }
}

TEST_CASE("true scores follow the predictor's own evaluation rule") {
  SUBCASE("detection predictors score the recorded metric") {
    const auto corpus = detection_corpus(200, 53);
    const auto predictor =
        train_predictor(corpus, "det", small_options(EstimatorKind::boost));
    const auto test = split_subset(corpus, Split::test);
    CHECK(true_scores(predictor, test) ==
          metric_values(test, "det", MetricKind::f1, 0.5));
  }

  SUBCASE("calibrated classification predictors score their own argmax") {
    const auto corpus = classification_corpus(300, 54);
    const auto predictor = train_predictor(
        corpus, "net", small_options(EstimatorKind::boost,
                                     MetricKind::accuracy));
    REQUIRE(predictor.logit_calibrator.has_value());
    const auto test = split_subset(corpus, Split::test);
    const auto truth = true_scores(predictor, test);
    for (std::size_t i = 0; i < test.records.size(); ++i) {
      const auto& record = test.records[i];
      const auto calibrated = predictor.logit_calibrator->apply(
          record.models.at("net").logits);
      const double expected =
          predicted_class(calibrated) == record.true_class ? 1.0 : 0.0;
      CHECK(truth[i] == expected);
    }

    // the temperature estimator keeps the raw argmax rule instead
    const auto temp = train_predictor(
        corpus, "net",
        small_options(EstimatorKind::temperature, MetricKind::accuracy));
    CHECK(true_scores(temp, test) ==
          metric_values(test, "net", MetricKind::accuracy, 0.5));
  }
}

TEST_CASE("task and estimator combinations are validated") {
  const auto detection = detection_corpus(120, 55);
  const auto classification = classification_corpus(120, 56);

  CHECK_THROWS_AS(train_predictor(detection, "det",
                                  small_options(EstimatorKind::temperature)),
                  ValidationError);
  CHECK_THROWS_AS(train_predictor(detection, "det",
                                  small_options(EstimatorKind::vector_scaling)),
                  ValidationError);
  CHECK_THROWS_AS(
      train_predictor(detection, "det",
                      small_options(EstimatorKind::boost, MetricKind::accuracy)),
      ValidationError);
  CHECK_THROWS_AS(
      train_predictor(classification, "net",
                      small_options(EstimatorKind::confidence,
                                    MetricKind::accuracy)),
      ValidationError);
  CHECK_THROWS_AS(
      train_predictor(classification, "net",
                      small_options(EstimatorKind::boost, MetricKind::f1)),
      ValidationError);
}

TEST_CASE("training requires usable splits") {
  SyntheticConfig config;
  config.task = Task::detection;
  config.num_images = 40;
  config.num_classes = 2;
  DetectionModelSpec model;
  model.model_id = "det";
  config.det_models.push_back(model);
  auto corpus = generate_synthetic(config, 57);

  CHECK_THROWS_AS(
      train_predictor(corpus, "det", small_options(EstimatorKind::boost)),
      ValidationError);

  // splits exist but train_fc is empty
  for (const auto& record : corpus.records) {
    corpus.splits.emplace(record.image_id, Split::train_posthoc);
  }
  CHECK_THROWS_AS(
      train_predictor(corpus, "det", small_options(EstimatorKind::boost)),
      ValidationError);
}

TEST_CASE("prediction fails cleanly when the model id is absent") {
  const auto corpus = detection_corpus(150, 58);
  const auto predictor =
      train_predictor(corpus, "det", small_options(EstimatorKind::boost));
  SyntheticConfig other_config;
  other_config.task = Task::detection;
  other_config.num_images = 10;
  other_config.num_classes = 2;
  DetectionModelSpec model;
  model.model_id = "somebody_else";
  other_config.det_models.push_back(model);
  const auto other = generate_synthetic(other_config, 59);
  CHECK_THROWS_AS(predict_scores(predictor, other), ValidationError);
}

TEST_CASE("model files reject garbage, wrong tags, and unknown versions") {
  CHECK_THROWS_AS(predictor_from_json("not json"), ValidationError);
  CHECK_THROWS_AS(predictor_from_json(R"({"format": "elsewhere"})"),
                  ValidationError);

  const auto corpus = detection_corpus(150, 60);
  const auto predictor = train_predictor(
      corpus, "det", small_options(EstimatorKind::confidence));
  auto root = nlohmann::json::parse(predictor_to_json(predictor));
  root["version"] = 999;
  CHECK_THROWS_WITH_AS(predictor_from_json(root.dump()),
                       doctest::Contains("version"), ValidationError);
}

TEST_CASE("sample complexity sweeps sizes and profiles deterministically") {
  const auto corpus = detection_corpus(400, 61);
  auto options = small_options(EstimatorKind::boost);
  const std::vector<std::size_t> sizes = {30, 80};

  const auto cells = run_sample_complexity(corpus, "det", sizes, options, 9);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].train_size == 30);
  CHECK(cells[0].profile == FeatureProfile::full);
  CHECK(cells[1].train_size == 30);
  CHECK(cells[1].profile == FeatureProfile::essential);
  CHECK(cells[2].train_size == 80);
  CHECK(cells[3].train_size == 80);
  for (const auto& cell : cells) {
    CHECK(cell.ece >= 0.0);
    CHECK(cell.ece <= 1.0);
  }

  const auto again = run_sample_complexity(corpus, "det", sizes, options, 9);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].ece == again[i].ece);
    CHECK(cells[i].spearman == again[i].spearman);
  }

  CHECK_THROWS_AS(run_sample_complexity(corpus, "det", {}, options, 9),
                  ValidationError);
  CHECK_THROWS_AS(run_sample_complexity(corpus, "det", {1}, options, 9),
                  ValidationError);
  CHECK_THROWS_AS(
      run_sample_complexity(corpus, "det", {100000}, options, 9),
      ValidationError);
}

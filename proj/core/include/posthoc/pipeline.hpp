#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "posthoc/boosting.hpp"
#include "posthoc/data_model.hpp"
#include "posthoc/features.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/mlp.hpp"
#include "posthoc/scaling.hpp"

namespace posthoc {

enum class EstimatorKind { boost, mlp, confidence, temperature, vector_scaling };

EstimatorKind parse_estimator(const std::string& name);
std::string to_string(EstimatorKind kind);

struct PredictorOptions {
  EstimatorKind estimator = EstimatorKind::boost;
  MetricKind metric = MetricKind::f1;
  double iou_threshold = 0.5;
  FeatureProfile profile = FeatureProfile::full;
  double ridge_lambda = 1e-3;
  BoostConfig boost;
  MlpConfig mlp;
};

// A trained per-image performance estimator for one recorded model.
// Auxiliary scorers and calibrators are fitted on the train_fc split, the
// estimator itself on train_posthoc. Detection estimators regress the chosen
// per-image metric from detection features; classification estimators work
// on vector-calibrated logits and estimate the probability that the argmax
// class is correct.
struct Predictor {
  EstimatorKind kind = EstimatorKind::boost;
  Task task = Task::detection;
  MetricKind metric = MetricKind::f1;
  double iou_threshold = 0.5;
  std::string model_id;
  int num_classes = 0;
  std::vector<std::string> feature_names;
  std::optional<ClassScoreModel> class_score;
  std::optional<LocationScoreModel> location_score;
  std::optional<VectorScaler> logit_calibrator;  // classification boost/mlp
  std::optional<BoostedRegressor> boost;
  std::optional<Mlp> mlp;
  std::optional<ConfidenceCalibrator> confidence;
  std::optional<TemperatureScaler> temperature;
  std::optional<VectorScaler> vector_scaling;
};

// Requires split assignments on the corpus.
Predictor train_predictor(const Corpus& corpus, const std::string& model_id,
                          const PredictorOptions& options);

// Per-record estimates in corpus order, each in [0, 1].
std::vector<double> predict_scores(const Predictor& predictor,
                                   const Corpus& corpus);

// True per-record metric values for the predictor's model and metric.
std::vector<double> true_scores(const Predictor& predictor,
                                const Corpus& corpus);

// Estimator quality (test-split ECE and Spearman) as a function of the
// train_posthoc subset size, for full and essential feature profiles. Sizes
// are sampled from train_posthoc without replacement with the given seed;
// train_fc shrinks by the same factor so every fitted ingredient (the class
// and location scores included) sees the reduced data budget.
struct SampleComplexityCell {
  std::size_t train_size = 0;
  FeatureProfile profile = FeatureProfile::full;
  double ece = 0.0;
  std::optional<double> spearman;
};

std::vector<SampleComplexityCell> run_sample_complexity(
    const Corpus& corpus, const std::string& model_id,
    const std::vector<std::size_t>& train_sizes, const PredictorOptions& options,
    std::uint64_t seed, int num_bins = 10);

}  // namespace posthoc

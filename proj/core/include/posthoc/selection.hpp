#pragma once

#include <string>
#include <vector>

#include "posthoc/boosting.hpp"
#include "posthoc/data_model.hpp"
#include "posthoc/features.hpp"
#include "posthoc/metrics.hpp"

namespace posthoc {

struct SelectionOptions {
  MetricKind metric = MetricKind::f1;
  double iou_threshold = 0.5;
  FeatureProfile profile = FeatureProfile::full;
  double ridge_lambda = 1e-3;
  BoostConfig boost;
};

// Feature layout for the selector: the per-model detection features of every
// candidate concatenated in list order, names prefixed by the model position
// ("m0_", "m1_", ...). Scorers (full profile) are fitted per model on
// train_fc.
struct ModelSelector {
  std::vector<std::string> model_ids;
  MetricKind metric = MetricKind::f1;
  double iou_threshold = 0.5;
  std::vector<std::string> feature_names;
  std::vector<ClassScoreModel> class_scores;        // empty for essential
  std::vector<LocationScoreModel> location_scores;  // empty for essential
  BoostedClassifier classifier;
};

FeatureMatrix selector_features(const ModelSelector& selector,
                                const Corpus& corpus);

// Trains the multiclass selector on train_posthoc; the label of an image is
// the index of its best model (ties to the lowest index).
ModelSelector train_model_selector(const Corpus& corpus,
                                   const std::vector<std::string>& model_ids,
                                   const SelectionOptions& options);

struct SelectionResult {
  std::vector<std::string> model_ids;
  std::vector<std::string> image_ids;       // test split order
  std::vector<int> chosen;                  // selector pick per image
  std::vector<int> oracle;                  // true best model per image
  std::vector<double> chosen_metric;        // realized metric of the pick
  std::vector<double> individual_mean;      // fixed-model baselines
  double combined_mean = 0.0;
  double oracle_mean = 0.0;
};

SelectionResult run_model_selection(const Corpus& corpus,
                                    const std::vector<std::string>& model_ids,
                                    const SelectionOptions& options);

}  // namespace posthoc

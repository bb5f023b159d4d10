#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posthoc/feature_matrix.hpp"

namespace posthoc {

struct BoostConfig {
  int rounds = 300;
  int max_depth = 5;
  double subsample = 0.7;
  double learning_rate = 0.1;
  int min_samples_leaf = 5;
  std::uint64_t seed = 0;
  // Metric targets live in [0, 1]; gap targets must stay unclamped.
  bool clamp_unit = true;
};

// Binary tree stored as a flat node array, node 0 is the root. Split nodes
// send x[feature] < threshold to the left child; leaves carry the mean
// residual of their training rows (learning rate applied at predict time).
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;
  int left = -1;
  int right = -1;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict_row(const std::vector<double>& x) const;
};

// Least-squares gradient boosting with exact greedy splits: thresholds are
// midpoints between consecutive distinct feature values, the best split
// maximizes variance reduction, and ties resolve to the lowest feature index
// and then the lowest threshold.
struct BoostedRegressor {
  BoostConfig config;
  std::vector<std::string> feature_names;
  double base_score = 0.0;
  std::vector<RegressionTree> trees;

  double predict_row(const std::vector<double>& x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;
};

BoostedRegressor train_boosted_regressor(const FeatureMatrix& x,
                                         const std::vector<double>& y,
                                         const BoostConfig& config);

// One-vs-rest multiclass boosting on softmax residuals: each round fits one
// tree per class to (one-hot - softmax probability). Prediction takes the
// argmax score, ties to the lowest class index.
struct BoostedClassifier {
  BoostConfig config;
  std::vector<std::string> feature_names;
  int num_classes = 0;
  std::vector<std::vector<RegressionTree>> rounds;  // [round][class]

  std::vector<double> scores_row(const std::vector<double>& x) const;
  int predict_row(const std::vector<double>& x) const;
  std::vector<int> predict(const FeatureMatrix& x) const;
};

BoostedClassifier train_boosted_classifier(const FeatureMatrix& x,
                                           const std::vector<int>& labels,
                                           int num_classes,
                                           const BoostConfig& config);

}  // namespace posthoc

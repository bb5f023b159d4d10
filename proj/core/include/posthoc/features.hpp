#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posthoc/data_model.hpp"
#include "posthoc/feature_matrix.hpp"
#include "posthoc/metrics.hpp"
#include "posthoc/scaling.hpp"

namespace posthoc {

// Linear model fitted by ridge regression; the intercept is not penalized.
struct RidgeModel {
  std::vector<double> weights;
  double intercept = 0.0;

  double predict(const std::vector<double>& x) const;
};

RidgeModel fit_ridge(const std::vector<std::vector<double>>& x,
                     const std::vector<double>& y, double lambda);

// Predicts the per-image metric from the histogram of predicted classes.
struct ClassScoreModel {
  int num_classes = 0;
  RidgeModel ridge;

  double score(const ImageRecord& record, const std::string& model_id) const;
};

ClassScoreModel fit_class_score(const Corpus& corpus,
                                const std::string& model_id, MetricKind metric,
                                double iou_threshold, double lambda = 1e-3);

// Predicts the per-image metric from where detections sit: counts of
// detection-box centers over a 5x5 grid, row-major, cell (row, col) with
// col = min(4, floor(cx * 5)) and likewise for rows.
struct LocationScoreModel {
  static constexpr int kGrid = 5;
  RidgeModel ridge;

  double score(const ImageRecord& record, const std::string& model_id) const;
};

LocationScoreModel fit_location_score(const Corpus& corpus,
                                      const std::string& model_id,
                                      MetricKind metric, double iou_threshold,
                                      double lambda = 1e-3);

std::vector<double> class_histogram(const ImageRecord& record,
                                    const std::string& model_id,
                                    int num_classes);
std::vector<double> location_histogram(const ImageRecord& record,
                                       const std::string& model_id);

// Canonical detection feature order. The full profile activates everything;
// the essential profile drops the two fitted scores (no auxiliary training
// needed) and keeps the rest.
std::vector<std::string> detection_feature_names();

enum class FeatureProfile { full, essential };

FeatureProfile parse_profile(const std::string& name);
std::string to_string(FeatureProfile profile);
std::vector<std::string> profile_features(FeatureProfile profile);

// Detection-output statistics plus, when scorers are supplied, the fitted
// class and location scores. Confidence statistics use the combined
// confidence; empty detection lists yield zeros.
std::map<std::string, double> model_features(const ImageRecord& record,
                                             const std::string& model_id,
                                             const ClassScoreModel* class_score,
                                             const LocationScoreModel* location_score);

// image_size (pixel count), hist_entropy, num_corners. Precomputed values on
// the record win; otherwise the image is loaded from image_path. Missing
// both is a validation error naming the record and feature.
std::map<std::string, double> image_features(const ImageRecord& record);

// One row in canonical order restricted to the requested feature names.
FeatureVector assemble_features(const ImageRecord& record,
                                const std::string& model_id,
                                const std::vector<std::string>& names,
                                const ClassScoreModel* class_score,
                                const LocationScoreModel* location_score);

FeatureMatrix build_detection_features(const Corpus& corpus,
                                       const std::string& model_id,
                                       const std::vector<std::string>& names,
                                       const ClassScoreModel* class_score,
                                       const LocationScoreModel* location_score);

// Classification features: the model's logits (calibrated when a scaler is
// given) followed by the argmax class, then any precomputed record features
// (which must be consistent across records).
FeatureMatrix build_classification_features(const Corpus& corpus,
                                            const std::string& model_id,
                                            const VectorScaler* calibrator);

}  // namespace posthoc

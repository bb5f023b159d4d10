#pragma once

#include <string>
#include <vector>

#include "posthoc/data_model.hpp"

namespace posthoc {

// Numerically stable softmax (max-shifted).
std::vector<double> softmax(const std::vector<double>& logits);

// Mean negative log-likelihood of the labels under softmax(logits).
double mean_nll(const std::vector<std::vector<double>>& logits,
                const std::vector<int>& labels);

// Single-parameter scaling: divide every logit by one temperature fitted to
// minimize validation NLL. T is searched by golden section on log T over
// [0.05, 20] to an absolute log-space tolerance of 1e-4.
struct TemperatureScaler {
  double temperature = 1.0;

  std::vector<double> apply(const std::vector<double>& logits) const;
};

TemperatureScaler fit_temperature(const std::vector<std::vector<double>>& logits,
                                  const std::vector<int>& labels);

// Per-class affine scaling: z -> w ⊙ z + b, fitted by full-batch gradient
// descent on the mean NLL (learning rate 0.01, 2000 iterations, w = 1 and
// b = 0 at start).
struct VectorScaler {
  std::vector<double> weights;
  std::vector<double> bias;

  std::vector<double> apply(const std::vector<double>& logits) const;
};

VectorScaler fit_vector(const std::vector<std::vector<double>>& logits,
                        const std::vector<int>& labels,
                        double learning_rate = 0.01, int iterations = 2000);

// Maps a detection confidence to the probability that the detection matches
// ground truth, by temperature-scaling the log-odds of the confidence.
struct ConfidenceCalibrator {
  double temperature = 1.0;

  double apply(double confidence) const;
};

ConfidenceCalibrator fit_confidence_calibrator(
    const std::vector<double>& confidences,
    const std::vector<double>& correct);

// Match-correctness labels for every detection of one model: confidence is
// the combined confidence, correct is 1 when greedy matching pairs the
// detection with a ground-truth object. Fails when the corpus holds no
// detections for the model.
struct DetectionCorrectness {
  std::vector<double> confidence;
  std::vector<double> correct;
};

DetectionCorrectness collect_detection_correctness(const Corpus& corpus,
                                                   const std::string& model_id,
                                                   double iou_threshold);

// Per-image confidence baseline: mean calibrated combined confidence of the
// model's detections, 0 when the image has none.
double mean_calibrated_confidence(const ImageRecord& record,
                                  const std::string& model_id,
                                  const ConfidenceCalibrator& calibrator);

}  // namespace posthoc

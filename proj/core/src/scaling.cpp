#include "posthoc/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "posthoc/errors.hpp"
#include "posthoc/metrics.hpp"

namespace posthoc {

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw ValidationError("softmax: empty logits");
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - peak);
    total += out[i];
  }
  for (auto& v : out) v /= total;
  return out;
}

namespace {

double log_sum_exp(const std::vector<double>& values) {
  const double peak = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (const double v : values) total += std::exp(v - peak);
  return peak + std::log(total);
}

void check_scaling_inputs(const std::vector<std::vector<double>>& logits,
                          const std::vector<int>& labels) {
  if (logits.size() != labels.size()) {
    throw ValidationError("logits and labels lengths differ");
  }
  if (logits.size() < 2) {
    throw ValidationError("calibrator fitting needs at least two samples");
  }
  const std::size_t dim = logits.front().size();
  if (dim == 0) throw ValidationError("logits must be non-empty");
  std::set<int> label_values;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i].size() != dim) {
      throw ValidationError("logits rows have inconsistent lengths");
    }
    for (const double v : logits[i]) {
      if (!std::isfinite(v)) throw ValidationError("logits must be finite");
    }
    if (labels[i] < 0 || labels[i] >= static_cast<int>(dim)) {
      throw ValidationError("label out of range at index " + std::to_string(i));
    }
    label_values.insert(labels[i]);
  }
  if (label_values.size() < 2) {
    throw ValidationError("calibrator fitting needs at least two label classes");
  }
}

// Golden-section minimization over [lo, hi] to absolute tolerance tol.
double golden_section(double lo, double hi, double tol,
                      const std::function<double(double)>& objective) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = objective(d);
    }
  }
  return (a + b) / 2.0;
}

}  // namespace

double mean_nll(const std::vector<std::vector<double>>& logits,
                const std::vector<int>& labels) {
  if (logits.empty() || logits.size() != labels.size()) {
    throw ValidationError("mean_nll: mismatched or empty inputs");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    total += log_sum_exp(logits[i]) -
             logits[i][static_cast<std::size_t>(labels[i])];
  }
  return total / static_cast<double>(logits.size());
}

std::vector<double> TemperatureScaler::apply(
    const std::vector<double>& logits) const {
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = logits[i] / temperature;
  }
  return out;
}

TemperatureScaler fit_temperature(const std::vector<std::vector<double>>& logits,
                                  const std::vector<int>& labels) {
  check_scaling_inputs(logits, labels);
  const auto nll_at = [&](double log_t) {
    const double t = std::exp(log_t);
    std::vector<std::vector<double>> scaled(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
      scaled[i].resize(logits[i].size());
      for (std::size_t j = 0; j < logits[i].size(); ++j) {
        scaled[i][j] = logits[i][j] / t;
      }
    }
    return mean_nll(scaled, labels);
  };
  const double log_t =
      golden_section(std::log(0.05), std::log(20.0), 1e-4, nll_at);
  return TemperatureScaler{std::exp(log_t)};
}

std::vector<double> VectorScaler::apply(const std::vector<double>& logits) const {
  if (logits.size() != weights.size()) {
    throw ValidationError("vector scaler dimension mismatch");
  }
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = weights[i] * logits[i] + bias[i];
  }
  return out;
}

VectorScaler fit_vector(const std::vector<std::vector<double>>& logits,
                        const std::vector<int>& labels, double learning_rate,
                        int iterations) {
  check_scaling_inputs(logits, labels);
  const std::size_t dim = logits.front().size();
  const auto n = static_cast<double>(logits.size());

  VectorScaler scaler;
  scaler.weights.assign(dim, 1.0);
  scaler.bias.assign(dim, 0.0);

  std::vector<double> grad_w(dim);
  std::vector<double> grad_b(dim);
  std::vector<double> scaled(dim);
  for (int iter = 0; iter < iterations; ++iter) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t i = 0; i < logits.size(); ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        scaled[j] = scaler.weights[j] * logits[i][j] + scaler.bias[j];
      }
      const auto probs = softmax(scaled);
      for (std::size_t j = 0; j < dim; ++j) {
        const double delta =
            probs[j] -
            (static_cast<int>(j) == labels[i] ? 1.0 : 0.0);
        grad_w[j] += delta * logits[i][j];
        grad_b[j] += delta;
      }
    }
    for (std::size_t j = 0; j < dim; ++j) {
      scaler.weights[j] -= learning_rate * grad_w[j] / n;
      scaler.bias[j] -= learning_rate * grad_b[j] / n;
    }
  }
  return scaler;
}

double ConfidenceCalibrator::apply(double confidence) const {
  const double clamped = std::clamp(confidence, 1e-6, 1.0 - 1e-6);
  const double log_odds = std::log(clamped / (1.0 - clamped));
  return 1.0 / (1.0 + std::exp(-log_odds / temperature));
}

ConfidenceCalibrator fit_confidence_calibrator(
    const std::vector<double>& confidences, const std::vector<double>& correct) {
  if (confidences.size() != correct.size()) {
    throw ValidationError("confidence calibrator inputs differ in length");
  }
  if (confidences.size() < 2) {
    throw ValidationError("confidence calibrator needs at least two detections");
  }
  bool has_pos = false;
  bool has_neg = false;
  for (const double c : correct) {
    if (c == 1.0) has_pos = true;
    else if (c == 0.0) has_neg = true;
    else throw ValidationError("correctness labels must be 0 or 1");
  }
  if (!has_pos || !has_neg) {
    throw ValidationError(
        "confidence calibrator needs both matched and unmatched detections");
  }

  const auto nll_at = [&](double log_t) {
    const ConfidenceCalibrator candidate{std::exp(log_t)};
    double total = 0.0;
    for (std::size_t i = 0; i < confidences.size(); ++i) {
      const double p =
          std::clamp(candidate.apply(confidences[i]), 1e-12, 1.0 - 1e-12);
      total -= correct[i] * std::log(p) + (1.0 - correct[i]) * std::log(1.0 - p);
    }
    return total / static_cast<double>(confidences.size());
  };
  const double log_t =
      golden_section(std::log(0.05), std::log(20.0), 1e-4, nll_at);
  return ConfidenceCalibrator{std::exp(log_t)};
}

DetectionCorrectness collect_detection_correctness(const Corpus& corpus,
                                                   const std::string& model_id,
                                                   double iou_threshold) {
  DetectionCorrectness out;
  for (const auto& record : corpus.records) {
    const auto it = record.models.find(model_id);
    if (it == record.models.end()) {
      throw ValidationError("record '" + record.image_id +
                            "' has no output for model '" + model_id + "'");
    }
    const auto& dets = it->second.dets;
    if (dets.empty()) continue;
    const auto matches = match_greedy(dets, record.gt, iou_threshold);
    std::vector<double> matched(dets.size(), 0.0);
    for (const auto& pair : matches) matched[pair.det_index] = 1.0;
    for (std::size_t d = 0; d < dets.size(); ++d) {
      out.confidence.push_back(combined_confidence(dets[d]));
      out.correct.push_back(matched[d]);
    }
  }
  if (out.confidence.empty()) {
    throw ValidationError("no detections found for model '" + model_id + "'");
  }
  return out;
}

double mean_calibrated_confidence(const ImageRecord& record,
                                  const std::string& model_id,
                                  const ConfidenceCalibrator& calibrator) {
  const auto it = record.models.find(model_id);
  if (it == record.models.end()) {
    throw ValidationError("record '" + record.image_id +
                          "' has no output for model '" + model_id + "'");
  }
  const auto& dets = it->second.dets;
  if (dets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& det : dets) {
    total += calibrator.apply(combined_confidence(det));
  }
  return total / static_cast<double>(dets.size());
}

}  // namespace posthoc

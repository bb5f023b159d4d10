#pragma once

#include <string>
#include <vector>

#include "posthoc/data_model.hpp"

namespace posthoc {

enum class MetricKind { f1, precision, recall, accuracy };

MetricKind parse_metric(const std::string& name);
std::string to_string(MetricKind metric);

// Intersection over union of two normalized boxes; 0 when the union is empty
// (two degenerate zero-area boxes).
double iou(const BBox& a, const BBox& b);

// One matched (prediction, ground truth) pair plus its IoU.
struct MatchPair {
  std::size_t det_index = 0;
  std::size_t gt_index = 0;
  double iou = 0.0;

  bool operator==(const MatchPair&) const = default;
};

// Greedy one-to-one matching. Predictions are visited in order of
// descending confidence (ties: lower original index first); each takes the
// unmatched same-class ground truth with the highest IoU, provided it
// reaches the threshold (ties: lower ground-truth index). Pairs are
// returned in visit order.
std::vector<MatchPair> match_greedy(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruthObject>& gt,
                                    double iou_threshold);

struct ImageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0;
  std::size_t num_dets = 0;
  std::size_t num_gt = 0;
};

// Per-image detection scores from greedy matching. Conventions for empty
// sides: no predictions and no ground truth means a perfect image (all three
// scores 1); one empty side zeroes the affected scores.
ImageMetrics image_metrics(const std::vector<Detection>& dets,
                           const std::vector<GroundTruthObject>& gt,
                           double iou_threshold);

// The selected per-image metric value for one model on one record.
// Detection records use image_metrics; classification records map accuracy
// to the 0/1 correctness of the argmax. Requesting a detection-only metric
// on a classification record is a validation error, and vice versa.
double metric_value(const ImageRecord& record, const std::string& model_id,
                    MetricKind metric, double iou_threshold);

// metric_value for every record, in corpus order.
std::vector<double> metric_values(const Corpus& corpus,
                                  const std::string& model_id,
                                  MetricKind metric, double iou_threshold);

// Confidence and objectness multiplied when objectness is recorded,
// confidence alone otherwise.
double combined_confidence(const Detection& det);

}  // namespace posthoc

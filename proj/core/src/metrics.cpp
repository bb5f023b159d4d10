#include "posthoc/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "posthoc/errors.hpp"

namespace posthoc {

MetricKind parse_metric(const std::string& name) {
  if (name == "f1") return MetricKind::f1;
  if (name == "precision") return MetricKind::precision;
  if (name == "recall") return MetricKind::recall;
  if (name == "accuracy") return MetricKind::accuracy;
  throw ValidationError("unknown metric '" + name +
                        "' (expected f1, precision, recall or accuracy)");
}

std::string to_string(MetricKind metric) {
  switch (metric) {
    case MetricKind::f1: return "f1";
    case MetricKind::precision: return "precision";
    case MetricKind::recall: return "recall";
    default: return "accuracy";
  }
}

double iou(const BBox& a, const BBox& b) {
  const double ix0 = std::max(a.x0, b.x0);
  const double iy0 = std::max(a.y0, b.y0);
  const double ix1 = std::min(a.x1, b.x1);
  const double iy1 = std::min(a.y1, b.y1);
  const double iw = ix1 - ix0;
  const double ih = iy1 - iy0;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

std::vector<MatchPair> match_greedy(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruthObject>& gt,
                                    double iou_threshold) {
  if (iou_threshold <= 0.0 || iou_threshold > 1.0) {
    throw ValidationError("iou threshold must lie in (0, 1]");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return dets[a].confidence > dets[b].confidence;
                   });

  std::vector<MatchPair> matches;
  std::vector<bool> gt_taken(gt.size(), false);
  for (const auto det_index : order) {
    const auto& det = dets[det_index];
    double best_iou = 0.0;
    std::size_t best_gt = gt.size();
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (gt_taken[g] || gt[g].class_id != det.class_id) continue;
      const double overlap = iou(det.bbox, gt[g].bbox);
      if (overlap >= iou_threshold && overlap > best_iou) {
        best_iou = overlap;
        best_gt = g;
      }
    }
    if (best_gt < gt.size()) {
      gt_taken[best_gt] = true;
      matches.push_back(MatchPair{det_index, best_gt, best_iou});
    }
  }
  return matches;
}

ImageMetrics image_metrics(const std::vector<Detection>& dets,
                           const std::vector<GroundTruthObject>& gt,
                           double iou_threshold) {
  ImageMetrics out;
  out.num_dets = dets.size();
  out.num_gt = gt.size();
  if (dets.empty() && gt.empty()) {
    out.precision = out.recall = out.f1 = 1.0;
    return out;
  }
  out.true_positives = match_greedy(dets, gt, iou_threshold).size();
  const auto tp = static_cast<double>(out.true_positives);
  out.precision = dets.empty() ? 0.0 : tp / static_cast<double>(dets.size());
  out.recall = gt.empty() ? 0.0 : tp / static_cast<double>(gt.size());
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

double metric_value(const ImageRecord& record, const std::string& model_id,
                    MetricKind metric, double iou_threshold) {
  const auto it = record.models.find(model_id);
  if (it == record.models.end()) {
    throw ValidationError("record '" + record.image_id +
                          "' has no output for model '" + model_id + "'");
  }
  const bool classification = record.true_class >= 0;
  if (classification) {
    if (metric != MetricKind::accuracy) {
      throw ValidationError("metric '" + to_string(metric) +
                            "' is not defined for classification records");
    }
    return predicted_class(it->second.logits) == record.true_class ? 1.0 : 0.0;
  }
  if (metric == MetricKind::accuracy) {
    throw ValidationError("metric 'accuracy' is not defined for detection records");
  }
  const auto scores = image_metrics(it->second.dets, record.gt, iou_threshold);
  switch (metric) {
    case MetricKind::precision: return scores.precision;
    case MetricKind::recall: return scores.recall;
    default: return scores.f1;
  }
}

std::vector<double> metric_values(const Corpus& corpus,
                                  const std::string& model_id,
                                  MetricKind metric, double iou_threshold) {
  std::vector<double> out;
  out.reserve(corpus.records.size());
  for (const auto& record : corpus.records) {
    out.push_back(metric_value(record, model_id, metric, iou_threshold));
  }
  return out;
}

double combined_confidence(const Detection& det) {
  return det.objectness ? det.confidence * (*det.objectness) : det.confidence;
}

}  // namespace posthoc

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "posthoc/boosting.hpp"
#include "posthoc/data_model.hpp"
#include "posthoc/features.hpp"
#include "posthoc/metrics.hpp"

namespace posthoc {

// Per-record metric improvement available by offloading: the best server
// metric minus the client metric. Negative when every server does worse.
struct GapData {
  std::vector<double> true_gap;
  std::vector<int> best_server;  // index into the servers list
};

GapData compute_gaps(const Corpus& corpus, const std::string& client,
                     const std::vector<std::string>& servers, MetricKind metric,
                     double iou_threshold);

// The rho-quantile offload threshold: the ceil(rho * n)-th largest predicted
// gap on a validation set. rho = 0 disables offloading (+infinity).
double threshold_for_fraction(std::vector<double> gaps, double rho);

struct OffloadOptions {
  MetricKind metric = MetricKind::f1;
  double iou_threshold = 0.5;
  FeatureProfile profile = FeatureProfile::full;
  double ridge_lambda = 1e-3;
  BoostConfig boost;        // clamp_unit is ignored; gaps are never clamped
  std::vector<double> rhos = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                              0.6, 0.7, 0.8, 0.9, 1.0};
  // When set (the default), images are offloaded only if the predicted gap
  // is also non-negative: threshold' = max(threshold, 0).
  bool gap_guard = true;
};

struct OffloadSweepRow {
  double rho = 0.0;
  double threshold = 0.0;        // on predicted gaps, validation quantile
  double fraction = 0.0;         // realized offload fraction on test
  double policy_metric = 0.0;    // mean metric with predicted-gap offloading
  double confidence_metric = 0.0;  // same budget, lowest mean confidence first
  double oracle_metric = 0.0;    // true gaps with the oracle's own threshold
};

struct OffloadSweepResult {
  std::vector<std::string> image_ids;  // test split order
  std::vector<double> predicted_gap;   // test split
  std::vector<double> true_gap;        // test split
  double client_mean = 0.0;            // never offload
  double all_offload_mean = 0.0;       // always offload
  std::vector<OffloadSweepRow> rows;
};

// Trains the gap regressor on train_posthoc (client features), picks
// per-rho thresholds on train_fc, and evaluates policies on the test split.
// With several servers the offload target is chosen per image by a selector
// trained on train_posthoc; the oracle always takes the true best server.
OffloadSweepResult run_offload_sweep(const Corpus& corpus,
                                     const std::string& client,
                                     const std::vector<std::string>& servers,
                                     const OffloadOptions& options);

}  // namespace posthoc

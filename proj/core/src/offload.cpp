#include "posthoc/offload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "posthoc/errors.hpp"
#include "posthoc/scaling.hpp"

namespace posthoc {

GapData compute_gaps(const Corpus& corpus, const std::string& client,
                     const std::vector<std::string>& servers, MetricKind metric,
                     double iou_threshold) {
  if (servers.empty()) {
    throw ValidationError("offload needs at least one server model");
  }
  const auto client_metric = metric_values(corpus, client, metric, iou_threshold);
  std::vector<std::vector<double>> server_metric;
  server_metric.reserve(servers.size());
  for (const auto& server : servers) {
    server_metric.push_back(metric_values(corpus, server, metric, iou_threshold));
  }

  GapData out;
  out.true_gap.resize(corpus.records.size());
  out.best_server.resize(corpus.records.size());
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    int best = 0;
    for (std::size_t s = 1; s < servers.size(); ++s) {
      if (server_metric[s][i] > server_metric[static_cast<std::size_t>(best)][i]) {
        best = static_cast<int>(s);
      }
    }
    out.best_server[i] = best;
    out.true_gap[i] =
        server_metric[static_cast<std::size_t>(best)][i] - client_metric[i];
  }
  return out;
}

double threshold_for_fraction(std::vector<double> gaps, double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw ValidationError("rho must lie in [0, 1]");
  }
  if (gaps.empty()) {
    throw ValidationError("threshold_for_fraction: no validation gaps");
  }
  if (rho == 0.0) return std::numeric_limits<double>::infinity();
  auto rank = static_cast<std::size_t>(
      std::ceil(rho * static_cast<double>(gaps.size())));
  rank = std::clamp<std::size_t>(rank, 1, gaps.size());
  std::sort(gaps.begin(), gaps.end(), std::greater<>());
  return gaps[rank - 1];
}

OffloadSweepResult run_offload_sweep(const Corpus& corpus,
                                     const std::string& client,
                                     const std::vector<std::string>& servers,
                                     const OffloadOptions& options) {
  if (servers.empty()) {
    throw ValidationError("offload needs at least one server model");
  }
  for (const auto& server : servers) {
    if (server == client) {
      throw ValidationError("client model cannot also be a server");
    }
  }
  if (!corpus.has_splits()) {
    throw ValidationError("offload sweep requires split assignments");
  }

  const Corpus fc = split_subset(corpus, Split::train_fc);
  const Corpus posthoc = split_subset(corpus, Split::train_posthoc);
  const Corpus test = split_subset(corpus, Split::test);
  if (fc.records.empty() || posthoc.records.empty() || test.records.empty()) {
    throw ValidationError("offload sweep needs all three splits non-empty");
  }

  // Client-side features; auxiliary scorers come from train_fc.
  std::optional<ClassScoreModel> class_score;
  std::optional<LocationScoreModel> location_score;
  const auto feature_names = profile_features(options.profile);
  if (options.profile == FeatureProfile::full) {
    class_score = fit_class_score(fc, client, options.metric,
                                  options.iou_threshold, options.ridge_lambda);
    location_score =
        fit_location_score(fc, client, options.metric, options.iou_threshold,
                           options.ridge_lambda);
  }
  const auto features_of = [&](const Corpus& subset) {
    return build_detection_features(subset, client, feature_names,
                                    class_score ? &*class_score : nullptr,
                                    location_score ? &*location_score : nullptr);
  };

  // Gap regressor on train_posthoc. Gaps can be negative, so never clamp.
  const auto posthoc_gaps = compute_gaps(posthoc, client, servers,
                                         options.metric, options.iou_threshold);
  BoostConfig gap_config = options.boost;
  gap_config.clamp_unit = false;
  const auto gap_model = train_boosted_regressor(
      features_of(posthoc), posthoc_gaps.true_gap, gap_config);

  // Server chooser: trivial for one server, a selector otherwise.
  std::vector<int> test_chosen(test.records.size(), 0);
  if (servers.size() > 1) {
    const auto selector = train_boosted_classifier(
        features_of(posthoc), posthoc_gaps.best_server,
        static_cast<int>(servers.size()), gap_config);
    test_chosen = selector.predict(features_of(test));
  }

  const auto fc_predicted = gap_model.predict(features_of(fc));
  const auto fc_gaps =
      compute_gaps(fc, client, servers, options.metric, options.iou_threshold);

  OffloadSweepResult result;
  for (const auto& record : test.records) {
    result.image_ids.push_back(record.image_id);
  }
  result.predicted_gap = gap_model.predict(features_of(test));
  const auto test_gaps =
      compute_gaps(test, client, servers, options.metric, options.iou_threshold);
  result.true_gap = test_gaps.true_gap;

  const auto client_metric =
      metric_values(test, client, options.metric, options.iou_threshold);
  std::vector<std::vector<double>> server_metric;
  server_metric.reserve(servers.size());
  for (const auto& server : servers) {
    server_metric.push_back(
        metric_values(test, server, options.metric, options.iou_threshold));
  }
  const auto n = test.records.size();
  const auto mean_of = [&](const std::vector<double>& values) {
    double total = 0.0;
    for (const double v : values) total += v;
    return total / static_cast<double>(values.size());
  };
  result.client_mean = mean_of(client_metric);
  double all_offload = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    all_offload +=
        server_metric[static_cast<std::size_t>(test_chosen[i])][i];
  }
  result.all_offload_mean = all_offload / static_cast<double>(n);

  // Confidence baseline ordering: least confident images offload first.
  const auto correctness = collect_detection_correctness(
      fc, client, options.iou_threshold);
  const auto calibrator =
      fit_confidence_calibrator(correctness.confidence, correctness.correct);
  std::vector<double> baseline_score(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    baseline_score[i] =
        mean_calibrated_confidence(test.records[i], client, calibrator);
  }
  std::vector<std::size_t> baseline_order(n);
  std::iota(baseline_order.begin(), baseline_order.end(), std::size_t{0});
  std::stable_sort(baseline_order.begin(), baseline_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return baseline_score[a] < baseline_score[b];
                   });

  for (const double rho : options.rhos) {
    OffloadSweepRow row;
    row.rho = rho;
    row.threshold = threshold_for_fraction(fc_predicted, rho);
    const double cut =
        options.gap_guard ? std::max(row.threshold, 0.0) : row.threshold;

    std::size_t offloaded = 0;
    double policy_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (result.predicted_gap[i] >= cut) {
        ++offloaded;
        policy_total +=
            server_metric[static_cast<std::size_t>(test_chosen[i])][i];
      } else {
        policy_total += client_metric[i];
      }
    }
    row.fraction = static_cast<double>(offloaded) / static_cast<double>(n);
    row.policy_metric = policy_total / static_cast<double>(n);

    // Same offload budget, spent on the least confident images.
    std::vector<bool> baseline_offload(n, false);
    for (std::size_t i = 0; i < offloaded; ++i) {
      baseline_offload[baseline_order[i]] = true;
    }
    double confidence_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      confidence_total =
          confidence_total +
          (baseline_offload[i]
               ? server_metric[static_cast<std::size_t>(test_chosen[i])][i]
               : client_metric[i]);
    }
    row.confidence_metric = confidence_total / static_cast<double>(n);

    // The oracle sees true gaps, with its threshold from validation truth.
    const double oracle_threshold = threshold_for_fraction(fc_gaps.true_gap, rho);
    const double oracle_cut =
        options.gap_guard ? std::max(oracle_threshold, 0.0) : oracle_threshold;
    double oracle_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (result.true_gap[i] >= oracle_cut) {
        oracle_total += server_metric[static_cast<std::size_t>(
            test_gaps.best_server[i])][i];
      } else {
        oracle_total += client_metric[i];
      }
    }
    row.oracle_metric = oracle_total / static_cast<double>(n);
    result.rows.push_back(row);
  }
  return result;
}

}  // namespace posthoc

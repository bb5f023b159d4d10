#include "posthoc/selection.hpp"

#include <set>

#include "posthoc/errors.hpp"

namespace posthoc {

FeatureMatrix selector_features(const ModelSelector& selector,
                                const Corpus& corpus) {
  const bool full = !selector.class_scores.empty();
  const auto base_names = full
                              ? profile_features(FeatureProfile::full)
                              : profile_features(FeatureProfile::essential);
  FeatureMatrix out;
  out.names = selector.feature_names;
  out.rows.resize(corpus.records.size());
  for (std::size_t m = 0; m < selector.model_ids.size(); ++m) {
    const auto block = build_detection_features(
        corpus, selector.model_ids[m], base_names,
        full ? &selector.class_scores[m] : nullptr,
        full ? &selector.location_scores[m] : nullptr);
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
      out.rows[i].insert(out.rows[i].end(), block.rows[i].begin(),
                         block.rows[i].end());
    }
  }
  return out;
}

ModelSelector train_model_selector(const Corpus& corpus,
                                   const std::vector<std::string>& model_ids,
                                   const SelectionOptions& options) {
  if (model_ids.size() < 2) {
    throw ValidationError("model selection needs at least two candidates");
  }
  std::set<std::string> distinct(model_ids.begin(), model_ids.end());
  if (distinct.size() != model_ids.size()) {
    throw ValidationError("model selection candidates must be distinct");
  }
  if (!corpus.has_splits()) {
    throw ValidationError("model selection requires split assignments");
  }
  const Corpus fc = split_subset(corpus, Split::train_fc);
  const Corpus posthoc = split_subset(corpus, Split::train_posthoc);
  if (fc.records.empty() || posthoc.records.empty()) {
    throw ValidationError("model selection needs non-empty training splits");
  }

  ModelSelector selector;
  selector.model_ids = model_ids;
  selector.metric = options.metric;
  selector.iou_threshold = options.iou_threshold;

  const auto base_names = profile_features(options.profile);
  for (std::size_t m = 0; m < model_ids.size(); ++m) {
    if (options.profile == FeatureProfile::full) {
      selector.class_scores.push_back(
          fit_class_score(fc, model_ids[m], options.metric,
                          options.iou_threshold, options.ridge_lambda));
      selector.location_scores.push_back(
          fit_location_score(fc, model_ids[m], options.metric,
                             options.iou_threshold, options.ridge_lambda));
    }
    for (const auto& name : base_names) {
      selector.feature_names.push_back("m" + std::to_string(m) + "_" + name);
    }
  }

  // Labels: best model per train_posthoc image, ties to the lowest index.
  std::vector<std::vector<double>> metric_rows;
  metric_rows.reserve(model_ids.size());
  for (const auto& id : model_ids) {
    metric_rows.push_back(
        metric_values(posthoc, id, options.metric, options.iou_threshold));
  }
  std::vector<int> labels(posthoc.records.size(), 0);
  for (std::size_t i = 0; i < posthoc.records.size(); ++i) {
    int best = 0;
    for (std::size_t m = 1; m < model_ids.size(); ++m) {
      if (metric_rows[m][i] > metric_rows[static_cast<std::size_t>(best)][i]) {
        best = static_cast<int>(m);
      }
    }
    labels[i] = best;
  }

  selector.classifier = train_boosted_classifier(
      selector_features(selector, posthoc), labels,
      static_cast<int>(model_ids.size()), options.boost);
  return selector;
}

SelectionResult run_model_selection(const Corpus& corpus,
                                    const std::vector<std::string>& model_ids,
                                    const SelectionOptions& options) {
  const auto selector = train_model_selector(corpus, model_ids, options);
  const Corpus test = split_subset(corpus, Split::test);
  if (test.records.empty()) {
    throw ValidationError("model selection needs a non-empty test split");
  }

  SelectionResult result;
  result.model_ids = model_ids;
  for (const auto& record : test.records) {
    result.image_ids.push_back(record.image_id);
  }
  result.chosen = selector.classifier.predict(selector_features(selector, test));

  std::vector<std::vector<double>> metric_rows;
  metric_rows.reserve(model_ids.size());
  for (const auto& id : model_ids) {
    metric_rows.push_back(
        metric_values(test, id, options.metric, options.iou_threshold));
  }
  const auto n = test.records.size();
  result.oracle.resize(n);
  result.chosen_metric.resize(n);
  double combined = 0.0;
  double oracle_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    for (std::size_t m = 1; m < model_ids.size(); ++m) {
      if (metric_rows[m][i] > metric_rows[static_cast<std::size_t>(best)][i]) {
        best = static_cast<int>(m);
      }
    }
    result.oracle[i] = best;
    const auto pick = static_cast<std::size_t>(result.chosen[i]);
    result.chosen_metric[i] = metric_rows[pick][i];
    combined += metric_rows[pick][i];
    oracle_total += metric_rows[static_cast<std::size_t>(best)][i];
  }
  result.combined_mean = combined / static_cast<double>(n);
  result.oracle_mean = oracle_total / static_cast<double>(n);
  for (std::size_t m = 0; m < model_ids.size(); ++m) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += metric_rows[m][i];
    result.individual_mean.push_back(total / static_cast<double>(n));
  }
  return result;
}

}  // namespace posthoc

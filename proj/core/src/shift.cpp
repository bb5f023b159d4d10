#include "posthoc/shift.hpp"

#include <algorithm>

#include "posthoc/errors.hpp"
#include "posthoc/scaling.hpp"

namespace posthoc {

namespace {

ShiftHistogram histogram_of(const std::vector<double>& predicted,
                            const std::vector<double>& truth, int num_bins) {
  ShiftHistogram out;
  out.num_bins = num_bins;
  out.correct.assign(static_cast<std::size_t>(num_bins), 0);
  out.incorrect.assign(static_cast<std::size_t>(num_bins), 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto bin = bin_index(predicted[i], num_bins);
    if (truth[i] >= 0.5) {
      out.correct[bin] += 1;
    } else {
      out.incorrect[bin] += 1;
    }
  }
  return out;
}

ShiftMethodResult method_result(std::vector<double> predicted,
                                const std::vector<double>& truth,
                                int num_bins) {
  ShiftMethodResult out;
  out.predicted = std::move(predicted);
  out.report = make_report(out.predicted, truth, num_bins);
  out.histogram = histogram_of(out.predicted, truth, num_bins);
  return out;
}

}  // namespace

ShiftResult run_dataset_shift(const Corpus& corpus, const std::string& model_id,
                              const ShiftOptions& options) {
  if (corpus.task != Task::classification) {
    throw ValidationError("dataset shift analysis needs a classification corpus");
  }
  if (options.num_bins < 1) {
    throw ValidationError("dataset shift: num_bins must be >= 1");
  }

  PredictorOptions boost_options;
  boost_options.estimator = EstimatorKind::boost;
  boost_options.metric = MetricKind::accuracy;
  boost_options.boost = options.boost;

  PredictorOptions mlp_options = boost_options;
  mlp_options.estimator = EstimatorKind::mlp;
  mlp_options.mlp = options.mlp;

  // Both share the deterministic train_fc calibrator fit, so the calibrator
  // stored on either predictor is the same scaler.
  const auto boost_predictor = train_predictor(corpus, model_id, boost_options);
  const auto mlp_predictor = train_predictor(corpus, model_id, mlp_options);

  const Corpus test = split_subset(corpus, Split::test);
  if (test.records.empty()) {
    throw ValidationError("dataset shift needs a non-empty test split");
  }

  ShiftResult result;
  result.calibrator = *boost_predictor.logit_calibrator;
  for (const auto& record : test.records) {
    result.image_ids.push_back(record.image_id);
  }
  result.truth = true_scores(boost_predictor, test);

  // Confidence baseline: calibrated maximum softmax probability.
  std::vector<double> confidence;
  confidence.reserve(test.records.size());
  for (const auto& record : test.records) {
    const auto& logits = record.models.at(model_id).logits;
    const auto probs = softmax(result.calibrator.apply(logits));
    confidence.push_back(*std::max_element(probs.begin(), probs.end()));
  }

  result.confidence =
      method_result(std::move(confidence), result.truth, options.num_bins);
  result.boost = method_result(predict_scores(boost_predictor, test),
                               result.truth, options.num_bins);
  result.mlp = method_result(predict_scores(mlp_predictor, test), result.truth,
                             options.num_bins);
  return result;
}

}  // namespace posthoc

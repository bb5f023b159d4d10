#include "posthoc/pipeline.hpp"

#include <algorithm>
#include <set>

#include "posthoc/calibration.hpp"
#include "posthoc/errors.hpp"
#include "posthoc/rng.hpp"

namespace posthoc {

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "boost") return EstimatorKind::boost;
  if (name == "mlp") return EstimatorKind::mlp;
  if (name == "confidence") return EstimatorKind::confidence;
  if (name == "temp") return EstimatorKind::temperature;
  if (name == "vector") return EstimatorKind::vector_scaling;
  throw ValidationError("unknown estimator '" + name +
                        "' (expected boost, mlp, confidence, temp or vector)");
}

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::boost: return "boost";
    case EstimatorKind::mlp: return "mlp";
    case EstimatorKind::confidence: return "confidence";
    case EstimatorKind::temperature: return "temp";
    default: return "vector";
  }
}

namespace {

struct ClassificationData {
  std::vector<std::vector<double>> logits;
  std::vector<int> labels;
};

ClassificationData classification_data(const Corpus& corpus,
                                       const std::string& model_id) {
  ClassificationData out;
  for (const auto& record : corpus.records) {
    const auto it = record.models.find(model_id);
    if (it == record.models.end()) {
      throw ValidationError("record '" + record.image_id +
                            "' has no output for model '" + model_id + "'");
    }
    out.logits.push_back(it->second.logits);
    out.labels.push_back(record.true_class);
  }
  return out;
}

// Correctness (0/1) of the calibrated argmax, the regression target for
// classification estimators.
std::vector<double> calibrated_correctness(const Corpus& corpus,
                                           const std::string& model_id,
                                           const VectorScaler& calibrator) {
  std::vector<double> out;
  out.reserve(corpus.records.size());
  for (const auto& record : corpus.records) {
    const auto& logits = record.models.at(model_id).logits;
    const int pred = predicted_class(calibrator.apply(logits));
    out.push_back(pred == record.true_class ? 1.0 : 0.0);
  }
  return out;
}

void check_task_estimator(Task task, EstimatorKind kind, MetricKind metric) {
  const bool classification = task == Task::classification;
  if (classification && metric != MetricKind::accuracy) {
    throw ValidationError("classification corpora support only metric 'accuracy'");
  }
  if (!classification && metric == MetricKind::accuracy) {
    throw ValidationError("detection corpora do not define metric 'accuracy'");
  }
  if (classification && kind == EstimatorKind::confidence) {
    throw ValidationError(
        "estimator 'confidence' applies only to detection corpora");
  }
  if (!classification && (kind == EstimatorKind::temperature ||
                          kind == EstimatorKind::vector_scaling)) {
    throw ValidationError("logit scaling estimators apply only to "
                          "classification corpora");
  }
}

}  // namespace

Predictor train_predictor(const Corpus& corpus, const std::string& model_id,
                          const PredictorOptions& options) {
  if (!corpus.has_splits()) {
    throw ValidationError(
        "training requires split assignments (run the split step first)");
  }
  check_task_estimator(corpus.task, options.estimator, options.metric);

  const Corpus fc = split_subset(corpus, Split::train_fc);
  const Corpus posthoc = split_subset(corpus, Split::train_posthoc);
  if (fc.records.empty() || posthoc.records.empty()) {
    throw ValidationError("training needs non-empty train_fc and "
                          "train_posthoc splits");
  }

  Predictor predictor;
  predictor.kind = options.estimator;
  predictor.task = corpus.task;
  predictor.metric = options.metric;
  predictor.iou_threshold = options.iou_threshold;
  predictor.model_id = model_id;
  predictor.num_classes = corpus.num_classes;

  if (corpus.task == Task::detection) {
    switch (options.estimator) {
      case EstimatorKind::confidence: {
        const auto data = collect_detection_correctness(fc, model_id,
                                                        options.iou_threshold);
        predictor.confidence =
            fit_confidence_calibrator(data.confidence, data.correct);
        return predictor;
      }
      case EstimatorKind::boost:
      case EstimatorKind::mlp: {
        predictor.feature_names = profile_features(options.profile);
        if (options.profile == FeatureProfile::full) {
          predictor.class_score =
              fit_class_score(fc, model_id, options.metric,
                              options.iou_threshold, options.ridge_lambda);
          predictor.location_score =
              fit_location_score(fc, model_id, options.metric,
                                 options.iou_threshold, options.ridge_lambda);
        }
        const auto features = build_detection_features(
            posthoc, model_id, predictor.feature_names,
            predictor.class_score ? &*predictor.class_score : nullptr,
            predictor.location_score ? &*predictor.location_score : nullptr);
        const auto targets =
            metric_values(posthoc, model_id, options.metric,
                          options.iou_threshold);
        if (options.estimator == EstimatorKind::boost) {
          predictor.boost =
              train_boosted_regressor(features, targets, options.boost);
        } else {
          predictor.mlp = train_mlp(features, targets, options.mlp);
        }
        return predictor;
      }
      default:
        throw std::logic_error("unreachable estimator/task combination");
    }
  }

  // Classification: calibrate logits on train_fc first.
  const auto fc_data = classification_data(fc, model_id);
  const VectorScaler calibrator = fit_vector(fc_data.logits, fc_data.labels);
  switch (options.estimator) {
    case EstimatorKind::temperature: {
      predictor.temperature = fit_temperature(fc_data.logits, fc_data.labels);
      return predictor;
    }
    case EstimatorKind::vector_scaling: {
      predictor.vector_scaling = calibrator;
      return predictor;
    }
    default: {
      predictor.logit_calibrator = calibrator;
      const auto features =
          build_classification_features(posthoc, model_id, &calibrator);
      predictor.feature_names = features.names;
      const auto targets =
          calibrated_correctness(posthoc, model_id, calibrator);
      if (options.estimator == EstimatorKind::boost) {
        predictor.boost =
            train_boosted_regressor(features, targets, options.boost);
      } else {
        predictor.mlp = train_mlp(features, targets, options.mlp);
      }
      return predictor;
    }
  }
}

std::vector<double> predict_scores(const Predictor& predictor,
                                   const Corpus& corpus) {
  std::vector<double> out;
  out.reserve(corpus.records.size());

  if (predictor.task == Task::detection) {
    if (predictor.kind == EstimatorKind::confidence) {
      for (const auto& record : corpus.records) {
        out.push_back(mean_calibrated_confidence(record, predictor.model_id,
                                                 *predictor.confidence));
      }
      return out;
    }
    const auto features = build_detection_features(
        corpus, predictor.model_id, predictor.feature_names,
        predictor.class_score ? &*predictor.class_score : nullptr,
        predictor.location_score ? &*predictor.location_score : nullptr);
    return predictor.kind == EstimatorKind::boost
               ? predictor.boost->predict(features)
               : predictor.mlp->predict(features);
  }

  switch (predictor.kind) {
    case EstimatorKind::temperature: {
      for (const auto& record : corpus.records) {
        const auto& logits = record.models.at(predictor.model_id).logits;
        const auto probs = softmax(predictor.temperature->apply(logits));
        out.push_back(*std::max_element(probs.begin(), probs.end()));
      }
      return out;
    }
    case EstimatorKind::vector_scaling: {
      for (const auto& record : corpus.records) {
        const auto& logits = record.models.at(predictor.model_id).logits;
        const auto probs = softmax(predictor.vector_scaling->apply(logits));
        out.push_back(*std::max_element(probs.begin(), probs.end()));
      }
      return out;
    }
    default: {
      const auto features = build_classification_features(
          corpus, predictor.model_id, &*predictor.logit_calibrator);
      if (features.names != predictor.feature_names) {
        throw ValidationError("feature layout differs from training");
      }
      return predictor.kind == EstimatorKind::boost
                 ? predictor.boost->predict(features)
                 : predictor.mlp->predict(features);
    }
  }
}

std::vector<double> true_scores(const Predictor& predictor,
                                const Corpus& corpus) {
  // Estimators that re-calibrate logits predict the correctness of their own
  // calibrated argmax, so the truth must use the same prediction rule.
  if (predictor.logit_calibrator) {
    return calibrated_correctness(corpus, predictor.model_id,
                                  *predictor.logit_calibrator);
  }
  if (predictor.vector_scaling) {
    return calibrated_correctness(corpus, predictor.model_id,
                                  *predictor.vector_scaling);
  }
  return metric_values(corpus, predictor.model_id, predictor.metric,
                       predictor.iou_threshold);
}

std::vector<SampleComplexityCell> run_sample_complexity(
    const Corpus& corpus, const std::string& model_id,
    const std::vector<std::size_t>& train_sizes, const PredictorOptions& options,
    std::uint64_t seed, int num_bins) {
  if (train_sizes.empty()) {
    throw ValidationError("sample complexity needs at least one train size");
  }
  if (!corpus.has_splits()) {
    throw ValidationError("sample complexity requires split assignments");
  }
  const Corpus posthoc = split_subset(corpus, Split::train_posthoc);
  const Corpus test = split_subset(corpus, Split::test);

  std::vector<SampleComplexityCell> cells;
  Rng rng(seed);
  for (const auto size : train_sizes) {
    if (size < 2 || size > posthoc.records.size()) {
      throw ValidationError(
          "train size " + std::to_string(size) +
          " exceeds the train_posthoc split (or is below 2)");
    }
    const auto picked =
        rng.sample_without_replacement(posthoc.records.size(), size);
    // Rebuild a corpus whose train_posthoc split is the subsample; train_fc
    // and test stay untouched.
    Corpus reduced;
    reduced.task = corpus.task;
    reduced.num_classes = corpus.num_classes;
    std::set<std::string> kept_ids;
    for (const auto index : picked) {
      kept_ids.insert(posthoc.records[index].image_id);
    }
    for (const auto& record : corpus.records) {
      const auto split = corpus.splits.at(record.image_id);
      if (split == Split::train_posthoc && !kept_ids.count(record.image_id)) {
        continue;
      }
      reduced.records.push_back(record);
      reduced.splits.emplace(record.image_id, split);
    }

    for (const auto profile : {FeatureProfile::full, FeatureProfile::essential}) {
      PredictorOptions local = options;
      local.profile = profile;
      const auto predictor = train_predictor(reduced, model_id, local);
      const auto predicted = predict_scores(predictor, test);
      const auto truth = true_scores(predictor, test);
      SampleComplexityCell cell;
      cell.train_size = size;
      cell.profile = profile;
      cell.ece = expected_calibration_error(predicted, truth, num_bins);
      cell.spearman = spearman(predicted, truth);
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace posthoc

#include "posthoc/features.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "posthoc/errors.hpp"
#include "posthoc/image_io.hpp"

namespace posthoc {

double RidgeModel::predict(const std::vector<double>& x) const {
  if (x.size() != weights.size()) {
    throw ValidationError("ridge model dimension mismatch");
  }
  double out = intercept;
  for (std::size_t i = 0; i < x.size(); ++i) out += weights[i] * x[i];
  return out;
}

RidgeModel fit_ridge(const std::vector<std::vector<double>>& x,
                     const std::vector<double>& y, double lambda) {
  if (x.size() != y.size() || x.empty()) {
    throw ValidationError("ridge fit: mismatched or empty inputs");
  }
  if (lambda < 0.0) throw ValidationError("ridge fit: lambda must be >= 0");
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto dim = static_cast<Eigen::Index>(x.front().size());

  // Augmented design [X | 1]; the penalty skips the intercept column.
  Eigen::MatrixXd design(n, dim + 1);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = x[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != dim) {
      throw ValidationError("ridge fit: rows have inconsistent lengths");
    }
    for (Eigen::Index j = 0; j < dim; ++j) {
      design(i, j) = row[static_cast<std::size_t>(j)];
    }
    design(i, dim) = 1.0;
    target(i) = y[static_cast<std::size_t>(i)];
  }

  Eigen::MatrixXd normal = design.transpose() * design;
  for (Eigen::Index j = 0; j < dim; ++j) normal(j, j) += lambda;
  const Eigen::VectorXd rhs = design.transpose() * target;
  const Eigen::VectorXd solution = normal.ldlt().solve(rhs);

  RidgeModel model;
  model.weights.resize(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    model.weights[static_cast<std::size_t>(j)] = solution(j);
  }
  model.intercept = solution(dim);
  return model;
}

std::vector<double> class_histogram(const ImageRecord& record,
                                    const std::string& model_id,
                                    int num_classes) {
  const auto it = record.models.find(model_id);
  if (it == record.models.end()) {
    throw ValidationError("record '" + record.image_id +
                          "' has no output for model '" + model_id + "'");
  }
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (const auto& det : it->second.dets) {
    if (det.class_id >= num_classes) {
      throw ValidationError("record '" + record.image_id + "': class " +
                            std::to_string(det.class_id) +
                            " exceeds the scorer's class count");
    }
    counts[static_cast<std::size_t>(det.class_id)] += 1.0;
  }
  return counts;
}

std::vector<double> location_histogram(const ImageRecord& record,
                                       const std::string& model_id) {
  const auto it = record.models.find(model_id);
  if (it == record.models.end()) {
    throw ValidationError("record '" + record.image_id +
                          "' has no output for model '" + model_id + "'");
  }
  constexpr int grid = LocationScoreModel::kGrid;
  std::vector<double> counts(grid * grid, 0.0);
  for (const auto& det : it->second.dets) {
    const double cx = (det.bbox.x0 + det.bbox.x1) / 2.0;
    const double cy = (det.bbox.y0 + det.bbox.y1) / 2.0;
    const int col = std::min(grid - 1, static_cast<int>(std::floor(cx * grid)));
    const int row = std::min(grid - 1, static_cast<int>(std::floor(cy * grid)));
    counts[static_cast<std::size_t>(row * grid + col)] += 1.0;
  }
  return counts;
}

double ClassScoreModel::score(const ImageRecord& record,
                              const std::string& model_id) const {
  return ridge.predict(class_histogram(record, model_id, num_classes));
}

ClassScoreModel fit_class_score(const Corpus& corpus,
                                const std::string& model_id, MetricKind metric,
                                double iou_threshold, double lambda) {
  if (corpus.records.empty()) {
    throw ValidationError("class score fit: empty corpus");
  }
  std::vector<std::vector<double>> x;
  x.reserve(corpus.records.size());
  for (const auto& record : corpus.records) {
    x.push_back(class_histogram(record, model_id, corpus.num_classes));
  }
  const auto y = metric_values(corpus, model_id, metric, iou_threshold);
  ClassScoreModel model;
  model.num_classes = corpus.num_classes;
  model.ridge = fit_ridge(x, y, lambda);
  return model;
}

double LocationScoreModel::score(const ImageRecord& record,
                                 const std::string& model_id) const {
  return ridge.predict(location_histogram(record, model_id));
}

LocationScoreModel fit_location_score(const Corpus& corpus,
                                      const std::string& model_id,
                                      MetricKind metric, double iou_threshold,
                                      double lambda) {
  if (corpus.records.empty()) {
    throw ValidationError("location score fit: empty corpus");
  }
  std::vector<std::vector<double>> x;
  x.reserve(corpus.records.size());
  for (const auto& record : corpus.records) {
    x.push_back(location_histogram(record, model_id));
  }
  const auto y = metric_values(corpus, model_id, metric, iou_threshold);
  LocationScoreModel model;
  model.ridge = fit_ridge(x, y, lambda);
  return model;
}

std::vector<std::string> detection_feature_names() {
  return {"class_score",  "location_score", "min_conf",     "max_conf",
          "mean_conf",    "num_boxes",      "min_box_size", "mean_box_size",
          "hist_entropy", "image_size",     "num_corners"};
}

FeatureProfile parse_profile(const std::string& name) {
  if (name == "full") return FeatureProfile::full;
  if (name == "essential") return FeatureProfile::essential;
  throw ValidationError("unknown profile '" + name +
                        "' (expected full or essential)");
}

std::string to_string(FeatureProfile profile) {
  return profile == FeatureProfile::full ? "full" : "essential";
}

std::vector<std::string> profile_features(FeatureProfile profile) {
  auto names = detection_feature_names();
  if (profile == FeatureProfile::essential) {
    std::erase(names, "class_score");
    std::erase(names, "location_score");
  }
  return names;
}

std::map<std::string, double> model_features(
    const ImageRecord& record, const std::string& model_id,
    const ClassScoreModel* class_score,
    const LocationScoreModel* location_score) {
  const auto it = record.models.find(model_id);
  if (it == record.models.end()) {
    throw ValidationError("record '" + record.image_id +
                          "' has no output for model '" + model_id + "'");
  }
  const auto& dets = it->second.dets;

  std::map<std::string, double> out;
  double min_conf = 0.0;
  double max_conf = 0.0;
  double mean_conf = 0.0;
  double min_size = 0.0;
  double mean_size = 0.0;
  if (!dets.empty()) {
    min_conf = 1.0;
    min_size = 1.0;
    for (const auto& det : dets) {
      const double conf = combined_confidence(det);
      const double size = det.bbox.area();
      min_conf = std::min(min_conf, conf);
      max_conf = std::max(max_conf, conf);
      mean_conf += conf;
      min_size = std::min(min_size, size);
      mean_size += size;
    }
    mean_conf /= static_cast<double>(dets.size());
    mean_size /= static_cast<double>(dets.size());
  }
  out["min_conf"] = min_conf;
  out["max_conf"] = max_conf;
  out["mean_conf"] = mean_conf;
  out["num_boxes"] = static_cast<double>(dets.size());
  out["min_box_size"] = min_size;
  out["mean_box_size"] = mean_size;
  if (class_score) out["class_score"] = class_score->score(record, model_id);
  if (location_score) {
    out["location_score"] = location_score->score(record, model_id);
  }
  return out;
}

namespace {

// Resolves one image-derived feature, loading the raster at most once.
double image_feature_value(const ImageRecord& record, const std::string& name,
                           std::optional<RasterImage>& cache) {
  if (name == "image_size") {
    return static_cast<double>(record.width) *
           static_cast<double>(record.height);
  }
  if (const auto it = record.features.find(name); it != record.features.end()) {
    return it->second;
  }
  if (!cache) {
    if (!record.image_path) {
      throw ValidationError("record '" + record.image_id + "': feature '" +
                            name +
                            "' needs a precomputed value or an image_path");
    }
    cache = load_pnm(*record.image_path);
  }
  if (name == "hist_entropy") return histogram_entropy(*cache);
  return static_cast<double>(fast_corner_count(*cache));
}

bool is_image_feature(const std::string& name) {
  return name == "hist_entropy" || name == "image_size" ||
         name == "num_corners";
}

}  // namespace

std::map<std::string, double> image_features(const ImageRecord& record) {
  std::optional<RasterImage> cache;
  std::map<std::string, double> out;
  for (const auto* name : {"hist_entropy", "image_size", "num_corners"}) {
    out[name] = image_feature_value(record, name, cache);
  }
  return out;
}

FeatureVector assemble_features(const ImageRecord& record,
                                const std::string& model_id,
                                const std::vector<std::string>& names,
                                const ClassScoreModel* class_score,
                                const LocationScoreModel* location_score) {
  if (names.empty()) {
    throw ValidationError("assemble_features: no features requested");
  }
  const auto canonical = detection_feature_names();
  const auto from_model =
      model_features(record, model_id, class_score, location_score);

  FeatureVector out;
  std::optional<RasterImage> cache;
  for (const auto& name : names) {
    if (std::find(canonical.begin(), canonical.end(), name) ==
        canonical.end()) {
      throw ValidationError("unknown feature '" + name + "'");
    }
    double value = 0.0;
    if (is_image_feature(name)) {
      value = image_feature_value(record, name, cache);
    } else {
      const auto it = from_model.find(name);
      if (it == from_model.end()) {
        throw ValidationError("feature '" + name +
                              "' needs a fitted scorer but none was supplied");
      }
      value = it->second;
    }
    out.names.push_back(name);
    out.values.push_back(value);
  }
  return out;
}

FeatureMatrix build_detection_features(const Corpus& corpus,
                                       const std::string& model_id,
                                       const std::vector<std::string>& names,
                                       const ClassScoreModel* class_score,
                                       const LocationScoreModel* location_score) {
  std::vector<FeatureVector> rows;
  rows.reserve(corpus.records.size());
  for (const auto& record : corpus.records) {
    rows.push_back(assemble_features(record, model_id, names, class_score,
                                     location_score));
  }
  return to_matrix(rows);
}

FeatureMatrix to_matrix(const std::vector<FeatureVector>& rows) {
  if (rows.empty()) throw ValidationError("to_matrix: no rows");
  FeatureMatrix out;
  out.names = rows.front().names;
  out.rows.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.names != out.names) {
      throw ValidationError("feature rows disagree on the feature layout");
    }
    out.rows.push_back(row.values);
  }
  return out;
}

FeatureMatrix build_classification_features(const Corpus& corpus,
                                            const std::string& model_id,
                                            const VectorScaler* calibrator) {
  if (corpus.records.empty()) {
    throw ValidationError("build_classification_features: empty corpus");
  }
  FeatureMatrix out;
  for (int c = 0; c < corpus.num_classes; ++c) {
    out.names.push_back("logit_" + std::to_string(c));
  }
  out.names.push_back("pred_class");
  std::vector<std::string> extra;
  for (const auto& [name, _] : corpus.records.front().features) {
    extra.push_back(name);
  }
  out.names.insert(out.names.end(), extra.begin(), extra.end());

  for (const auto& record : corpus.records) {
    const auto it = record.models.find(model_id);
    if (it == record.models.end()) {
      throw ValidationError("record '" + record.image_id +
                            "' has no output for model '" + model_id + "'");
    }
    std::vector<double> logits = it->second.logits;
    if (calibrator) logits = calibrator->apply(logits);
    std::vector<double> row = logits;
    row.push_back(static_cast<double>(predicted_class(logits)));
    for (const auto& name : extra) {
      const auto feature = record.features.find(name);
      if (feature == record.features.end()) {
        throw ValidationError("record '" + record.image_id +
                              "' is missing precomputed feature '" + name +
                              "'");
      }
      row.push_back(feature->second);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace posthoc

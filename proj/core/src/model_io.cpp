#include "posthoc/model_io.hpp"

#include <nlohmann/json.hpp>

#include "posthoc/errors.hpp"
#include "posthoc/text_io.hpp"

namespace posthoc {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kFormat = "posthoc-predictor";
constexpr int kVersion = 1;

ordered_json ridge_json(const RidgeModel& model) {
  ordered_json out;
  out["weights"] = model.weights;
  out["intercept"] = model.intercept;
  return out;
}

RidgeModel ridge_from(const json& object) {
  RidgeModel model;
  model.weights = object.at("weights").get<std::vector<double>>();
  model.intercept = object.at("intercept").get<double>();
  return model;
}

ordered_json boost_config_json(const BoostConfig& config) {
  ordered_json out;
  out["rounds"] = config.rounds;
  out["max_depth"] = config.max_depth;
  out["subsample"] = config.subsample;
  out["learning_rate"] = config.learning_rate;
  out["min_samples_leaf"] = config.min_samples_leaf;
  out["seed"] = config.seed;
  out["clamp_unit"] = config.clamp_unit;
  return out;
}

BoostConfig boost_config_from(const json& object) {
  BoostConfig config;
  config.rounds = object.at("rounds").get<int>();
  config.max_depth = object.at("max_depth").get<int>();
  config.subsample = object.at("subsample").get<double>();
  config.learning_rate = object.at("learning_rate").get<double>();
  config.min_samples_leaf = object.at("min_samples_leaf").get<int>();
  config.seed = object.at("seed").get<std::uint64_t>();
  config.clamp_unit = object.at("clamp_unit").get<bool>();
  return config;
}

ordered_json tree_json(const RegressionTree& tree) {
  // Column layout keeps files compact: one array per node field.
  ordered_json out;
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<double> value;
  std::vector<int> left;
  std::vector<int> right;
  for (const auto& node : tree.nodes) {
    feature.push_back(node.feature);
    threshold.push_back(node.threshold);
    value.push_back(node.value);
    left.push_back(node.left);
    right.push_back(node.right);
  }
  out["feature"] = feature;
  out["threshold"] = threshold;
  out["value"] = value;
  out["left"] = left;
  out["right"] = right;
  return out;
}

RegressionTree tree_from(const json& object) {
  RegressionTree tree;
  const auto feature = object.at("feature").get<std::vector<int>>();
  const auto threshold = object.at("threshold").get<std::vector<double>>();
  const auto value = object.at("value").get<std::vector<double>>();
  const auto left = object.at("left").get<std::vector<int>>();
  const auto right = object.at("right").get<std::vector<int>>();
  if (feature.size() != threshold.size() || feature.size() != value.size() ||
      feature.size() != left.size() || feature.size() != right.size()) {
    throw ValidationError("model file: tree arrays disagree in length");
  }
  tree.nodes.resize(feature.size());
  for (std::size_t i = 0; i < feature.size(); ++i) {
    tree.nodes[i] = TreeNode{feature[i], threshold[i], value[i], left[i],
                             right[i]};
  }
  return tree;
}

ordered_json boost_json(const BoostedRegressor& model) {
  ordered_json out;
  out["config"] = boost_config_json(model.config);
  out["base_score"] = model.base_score;
  auto trees = ordered_json::array();
  for (const auto& tree : model.trees) trees.push_back(tree_json(tree));
  out["trees"] = std::move(trees);
  return out;
}

BoostedRegressor boost_from(const json& object,
                            const std::vector<std::string>& feature_names) {
  BoostedRegressor model;
  model.config = boost_config_from(object.at("config"));
  model.base_score = object.at("base_score").get<double>();
  model.feature_names = feature_names;
  for (const auto& tree : object.at("trees")) {
    model.trees.push_back(tree_from(tree));
  }
  return model;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  if (r == 0) throw ValidationError("model file: empty matrix");
  const auto c = static_cast<Eigen::Index>(rows.at(0).size());
  Eigen::MatrixXd out(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != c) {
      throw ValidationError("model file: ragged matrix");
    }
    for (Eigen::Index j = 0; j < c; ++j) {
      out(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
  }
  return out;
}

ordered_json vector_json(const Eigen::VectorXd& v) {
  auto out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from(const json& values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) = values.at(static_cast<std::size_t>(i)).get<double>();
  }
  return out;
}

ordered_json mlp_json(const Mlp& model) {
  ordered_json out;
  ordered_json config;
  config["learning_rate"] = model.config.learning_rate;
  config["epochs"] = model.config.epochs;
  config["batch_size"] = model.config.batch_size;
  config["seed"] = model.config.seed;
  config["clamp_unit"] = model.config.clamp_unit;
  out["config"] = std::move(config);
  out["feature_mean"] = vector_json(model.feature_mean);
  out["feature_scale"] = vector_json(model.feature_scale);
  out["w1"] = matrix_json(model.w1);
  out["b1"] = vector_json(model.b1);
  out["w2"] = matrix_json(model.w2);
  out["b2"] = vector_json(model.b2);
  out["w3"] = vector_json(model.w3.transpose());
  out["b3"] = model.b3;
  return out;
}

Mlp mlp_from(const json& object, const std::vector<std::string>& feature_names) {
  Mlp model;
  const auto& config = object.at("config");
  model.config.learning_rate = config.at("learning_rate").get<double>();
  model.config.epochs = config.at("epochs").get<int>();
  model.config.batch_size = config.at("batch_size").get<int>();
  model.config.seed = config.at("seed").get<std::uint64_t>();
  model.config.clamp_unit = config.at("clamp_unit").get<bool>();
  model.feature_names = feature_names;
  model.feature_mean = vector_from(object.at("feature_mean"));
  model.feature_scale = vector_from(object.at("feature_scale"));
  model.w1 = matrix_from(object.at("w1"));
  model.b1 = vector_from(object.at("b1"));
  model.w2 = matrix_from(object.at("w2"));
  model.b2 = vector_from(object.at("b2"));
  model.w3 = vector_from(object.at("w3")).transpose();
  model.b3 = object.at("b3").get<double>();
  return model;
}

ordered_json scaler_json(const VectorScaler& scaler) {
  ordered_json out;
  out["weights"] = scaler.weights;
  out["bias"] = scaler.bias;
  return out;
}

VectorScaler scaler_from(const json& object) {
  VectorScaler scaler;
  scaler.weights = object.at("weights").get<std::vector<double>>();
  scaler.bias = object.at("bias").get<std::vector<double>>();
  if (scaler.weights.size() != scaler.bias.size()) {
    throw ValidationError("model file: scaler weight/bias size mismatch");
  }
  return scaler;
}

}  // namespace

std::string predictor_to_json(const Predictor& predictor) {
  ordered_json out;
  out["format"] = kFormat;
  out["version"] = kVersion;
  out["estimator"] = to_string(predictor.kind);
  out["task"] = to_string(predictor.task);
  out["metric"] = to_string(predictor.metric);
  out["iou_threshold"] = predictor.iou_threshold;
  out["model_id"] = predictor.model_id;
  out["num_classes"] = predictor.num_classes;
  out["feature_names"] = predictor.feature_names;
  if (predictor.class_score) {
    ordered_json cs;
    cs["num_classes"] = predictor.class_score->num_classes;
    cs["ridge"] = ridge_json(predictor.class_score->ridge);
    out["class_score"] = std::move(cs);
  }
  if (predictor.location_score) {
    ordered_json ls;
    ls["ridge"] = ridge_json(predictor.location_score->ridge);
    out["location_score"] = std::move(ls);
  }
  if (predictor.logit_calibrator) {
    out["logit_calibrator"] = scaler_json(*predictor.logit_calibrator);
  }
  if (predictor.boost) out["boost"] = boost_json(*predictor.boost);
  if (predictor.mlp) out["mlp"] = mlp_json(*predictor.mlp);
  if (predictor.confidence) {
    out["confidence"] = {{"temperature", predictor.confidence->temperature}};
  }
  if (predictor.temperature) {
    out["temperature"] = {{"temperature", predictor.temperature->temperature}};
  }
  if (predictor.vector_scaling) {
    out["vector_scaling"] = scaler_json(*predictor.vector_scaling);
  }
  return out.dump(2) + "\n";
}

Predictor predictor_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model file: invalid JSON (") + e.what() +
                          ")");
  }
  try {
    if (!root.is_object() || root.value("format", "") != kFormat) {
      throw ValidationError("model file: missing or wrong format tag");
    }
    if (root.value("version", 0) != kVersion) {
      throw ValidationError("model file: unsupported version");
    }
    Predictor predictor;
    predictor.kind = parse_estimator(root.at("estimator").get<std::string>());
    predictor.task = parse_task(root.at("task").get<std::string>());
    predictor.metric = parse_metric(root.at("metric").get<std::string>());
    predictor.iou_threshold = root.at("iou_threshold").get<double>();
    predictor.model_id = root.at("model_id").get<std::string>();
    predictor.num_classes = root.at("num_classes").get<int>();
    predictor.feature_names =
        root.at("feature_names").get<std::vector<std::string>>();
    if (root.contains("class_score")) {
      ClassScoreModel cs;
      cs.num_classes = root.at("class_score").at("num_classes").get<int>();
      cs.ridge = ridge_from(root.at("class_score").at("ridge"));
      predictor.class_score = std::move(cs);
    }
    if (root.contains("location_score")) {
      LocationScoreModel ls;
      ls.ridge = ridge_from(root.at("location_score").at("ridge"));
      predictor.location_score = std::move(ls);
    }
    if (root.contains("logit_calibrator")) {
      predictor.logit_calibrator = scaler_from(root.at("logit_calibrator"));
    }
    if (root.contains("boost")) {
      predictor.boost = boost_from(root.at("boost"), predictor.feature_names);
    }
    if (root.contains("mlp")) {
      predictor.mlp = mlp_from(root.at("mlp"), predictor.feature_names);
    }
    if (root.contains("confidence")) {
      predictor.confidence = ConfidenceCalibrator{
          root.at("confidence").at("temperature").get<double>()};
    }
    if (root.contains("temperature")) {
      predictor.temperature = TemperatureScaler{
          root.at("temperature").at("temperature").get<double>()};
    }
    if (root.contains("vector_scaling")) {
      predictor.vector_scaling = scaler_from(root.at("vector_scaling"));
    }
    return predictor;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void save_predictor(const Predictor& predictor,
                    const std::filesystem::path& path) {
  write_text_file(path, predictor_to_json(predictor));
}

Predictor load_predictor(const std::filesystem::path& path) {
  return predictor_from_json(read_text_file(path));
}

}  // namespace posthoc

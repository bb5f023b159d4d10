#include "posthoc/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "posthoc/errors.hpp"
#include "posthoc/rng.hpp"
#include "posthoc/scaling.hpp"

namespace posthoc {

namespace {

void check_config(const BoostConfig& config) {
  if (config.rounds < 0) throw ValidationError("boosting: rounds must be >= 0");
  if (config.max_depth < 1) {
    throw ValidationError("boosting: max_depth must be >= 1");
  }
  if (!(config.subsample > 0.0 && config.subsample <= 1.0)) {
    throw ValidationError("boosting: subsample must lie in (0, 1]");
  }
  if (!(config.learning_rate > 0.0 && config.learning_rate <= 1.0)) {
    throw ValidationError("boosting: learning_rate must lie in (0, 1]");
  }
  if (config.min_samples_leaf < 1) {
    throw ValidationError("boosting: min_samples_leaf must be >= 1");
  }
}

void check_matrix(const FeatureMatrix& x) {
  if (x.rows.size() < 2) {
    throw ValidationError("boosting: need at least two training rows");
  }
  if (x.names.empty()) throw ValidationError("boosting: no features");
  for (const auto& row : x.rows) {
    if (row.size() != x.names.size()) {
      throw ValidationError("boosting: row width differs from feature names");
    }
    for (const double v : row) {
      if (!std::isfinite(v)) {
        throw ValidationError("boosting: features must be finite");
      }
    }
  }
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

// Exact greedy search. Rows are described by indices into x; residuals are
// indexed the same way. Gain is the variance-reduction difference of sums of
// squared errors, computed from group prefix sums so that ties inside equal
// feature values cannot affect the result.
SplitChoice best_split(const FeatureMatrix& x,
                       const std::vector<std::size_t>& rows,
                       const std::vector<double>& residuals,
                       int min_samples_leaf) {
  const std::size_t n = rows.size();
  SplitChoice best;
  if (n < 2 * static_cast<std::size_t>(min_samples_leaf)) return best;

  double total_sum = 0.0;
  double total_sq = 0.0;
  for (const auto r : rows) {
    total_sum += residuals[r];
    total_sq += residuals[r] * residuals[r];
  }
  const double parent_sse =
      total_sq - total_sum * total_sum / static_cast<double>(n);

  std::vector<std::pair<double, double>> samples(n);  // (feature value, residual)
  for (std::size_t f = 0; f < x.names.size(); ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      samples[i] = {x.rows[rows[i]][f], residuals[rows[i]]};
    }
    std::sort(samples.begin(), samples.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double left_sum = 0.0;
    double left_sq = 0.0;
    std::size_t left_n = 0;
    std::size_t i = 0;
    while (i < n) {
      // Advance over one group of equal feature values.
      std::size_t j = i;
      while (j < n && samples[j].first == samples[i].first) {
        left_sum += samples[j].second;
        left_sq += samples[j].second * samples[j].second;
        ++left_n;
        ++j;
      }
      if (j == n) break;  // no boundary after the last group
      const std::size_t right_n = n - left_n;
      if (left_n >= static_cast<std::size_t>(min_samples_leaf) &&
          right_n >= static_cast<std::size_t>(min_samples_leaf)) {
        const double right_sum = total_sum - left_sum;
        const double right_sq = total_sq - left_sq;
        const double left_sse =
            left_sq - left_sum * left_sum / static_cast<double>(left_n);
        const double right_sse =
            right_sq - right_sum * right_sum / static_cast<double>(right_n);
        const double gain = parent_sse - left_sse - right_sse;
        // For adjacent doubles the midpoint can round onto the left value,
        // and then v < threshold would separate nothing; skip such boundaries.
        const double threshold =
            (samples[j - 1].first + samples[j].first) / 2.0;
        if (threshold > samples[j - 1].first && gain > best.gain + 1e-12 &&
            gain > 1e-12) {
          best.found = true;
          best.feature = static_cast<int>(f);
          best.threshold = threshold;
          best.gain = gain;
        }
      }
      i = j;
    }
  }
  return best;
}

RegressionTree build_tree(const FeatureMatrix& x,
                          const std::vector<std::size_t>& rows,
                          const std::vector<double>& residuals,
                          const BoostConfig& config) {
  RegressionTree tree;

  struct Pending {
    int node = 0;
    int depth = 0;
    std::vector<std::size_t> rows;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, 0, rows});

  while (!stack.empty()) {
    Pending item = std::move(stack.back());
    stack.pop_back();

    double mean = 0.0;
    for (const auto r : item.rows) mean += residuals[r];
    mean /= static_cast<double>(item.rows.size());

    SplitChoice choice;
    if (item.depth < config.max_depth) {
      choice = best_split(x, item.rows, residuals, config.min_samples_leaf);
    }
    if (!choice.found) {
      tree.nodes[static_cast<std::size_t>(item.node)].value = mean;
      continue;
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (const auto r : item.rows) {
      const double v = x.rows[r][static_cast<std::size_t>(choice.feature)];
      (v < choice.threshold ? left_rows : right_rows).push_back(r);
    }
    if (left_rows.empty() || right_rows.empty()) {
      tree.nodes[static_cast<std::size_t>(item.node)].value = mean;
      continue;
    }

    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    auto& node = tree.nodes[static_cast<std::size_t>(item.node)];
    node.feature = choice.feature;
    node.threshold = choice.threshold;
    node.left = left;
    node.right = right;
    stack.push_back({right, item.depth + 1, std::move(right_rows)});
    stack.push_back({left, item.depth + 1, std::move(left_rows)});
  }
  return tree;
}

std::vector<std::size_t> subsample_rows(std::size_t n, double fraction,
                                        Rng& rng) {
  auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n)));
  count = std::clamp<std::size_t>(count, 1, n);
  if (count == n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    return all;
  }
  return rng.sample_without_replacement(n, count);
}

}  // namespace

double RegressionTree::predict_row(const std::vector<double>& x) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left
                                                                : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

double BoostedRegressor::predict_row(const std::vector<double>& x) const {
  if (x.size() != feature_names.size()) {
    throw ValidationError("boosted regressor: feature width mismatch");
  }
  double out = base_score;
  for (const auto& tree : trees) {
    out += config.learning_rate * tree.predict_row(x);
  }
  if (config.clamp_unit) out = std::clamp(out, 0.0, 1.0);
  return out;
}

std::vector<double> BoostedRegressor::predict(const FeatureMatrix& x) const {
  if (x.names != feature_names) {
    throw ValidationError(
        "boosted regressor: feature layout differs from training");
  }
  std::vector<double> out;
  out.reserve(x.rows.size());
  for (const auto& row : x.rows) out.push_back(predict_row(row));
  return out;
}

BoostedRegressor train_boosted_regressor(const FeatureMatrix& x,
                                         const std::vector<double>& y,
                                         const BoostConfig& config) {
  check_config(config);
  check_matrix(x);
  if (y.size() != x.rows.size()) {
    throw ValidationError("boosting: target length differs from rows");
  }
  for (const double v : y) {
    if (!std::isfinite(v)) {
      throw ValidationError("boosting: targets must be finite");
    }
  }

  BoostedRegressor model;
  model.config = config;
  model.feature_names = x.names;
  double mean = 0.0;
  for (const double v : y) mean += v;
  model.base_score = mean / static_cast<double>(y.size());
  // An exact base score for constant targets lets the residual pass see true
  // zeros and stop before growing any tree.
  if (std::all_of(y.begin(), y.end(),
                  [&](double v) { return v == y.front(); })) {
    model.base_score = y.front();
  }

  const std::size_t n = x.rows.size();
  std::vector<double> current(n, model.base_score);
  std::vector<double> residuals(n, 0.0);
  Rng rng(config.seed);
  for (int round = 0; round < config.rounds; ++round) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residuals[i] = y[i] - current[i];
      sse += residuals[i] * residuals[i];
    }
    if (sse == 0.0) break;  // nothing left to fit

    const auto rows = subsample_rows(n, config.subsample, rng);
    auto tree = build_tree(x, rows, residuals, config);
    for (std::size_t i = 0; i < n; ++i) {
      current[i] += config.learning_rate * tree.predict_row(x.rows[i]);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

std::vector<double> BoostedClassifier::scores_row(
    const std::vector<double>& x) const {
  if (x.size() != feature_names.size()) {
    throw ValidationError("boosted classifier: feature width mismatch");
  }
  std::vector<double> scores(static_cast<std::size_t>(num_classes), 0.0);
  for (const auto& round : rounds) {
    for (int k = 0; k < num_classes; ++k) {
      scores[static_cast<std::size_t>(k)] +=
          config.learning_rate *
          round[static_cast<std::size_t>(k)].predict_row(x);
    }
  }
  return scores;
}

int BoostedClassifier::predict_row(const std::vector<double>& x) const {
  const auto scores = scores_row(x);
  int best = 0;
  for (int k = 1; k < num_classes; ++k) {
    if (scores[static_cast<std::size_t>(k)] >
        scores[static_cast<std::size_t>(best)]) {
      best = k;
    }
  }
  return best;
}

std::vector<int> BoostedClassifier::predict(const FeatureMatrix& x) const {
  if (x.names != feature_names) {
    throw ValidationError(
        "boosted classifier: feature layout differs from training");
  }
  std::vector<int> out;
  out.reserve(x.rows.size());
  for (const auto& row : x.rows) out.push_back(predict_row(row));
  return out;
}

BoostedClassifier train_boosted_classifier(const FeatureMatrix& x,
                                           const std::vector<int>& labels,
                                           int num_classes,
                                           const BoostConfig& config) {
  check_config(config);
  check_matrix(x);
  if (labels.size() != x.rows.size()) {
    throw ValidationError("boosting: label count differs from rows");
  }
  if (num_classes < 2) {
    throw ValidationError("boosting: need at least two classes");
  }
  std::vector<std::size_t> class_counts(static_cast<std::size_t>(num_classes),
                                        0);
  for (const int label : labels) {
    if (label < 0 || label >= num_classes) {
      throw ValidationError("boosting: label out of range");
    }
    class_counts[static_cast<std::size_t>(label)] += 1;
  }
  for (int k = 0; k < num_classes; ++k) {
    if (class_counts[static_cast<std::size_t>(k)] == 0) {
      std::cerr << "warning: class " << k
                << " absent from selector training; it will never be chosen\n";
    }
  }

  BoostedClassifier model;
  model.config = config;
  model.config.clamp_unit = false;  // scores are logits, never clamped
  model.feature_names = x.names;
  model.num_classes = num_classes;

  const std::size_t n = x.rows.size();
  std::vector<std::vector<double>> scores(
      n, std::vector<double>(static_cast<std::size_t>(num_classes), 0.0));
  std::vector<double> residuals(n, 0.0);
  Rng rng(config.seed);
  for (int round = 0; round < config.rounds; ++round) {
    const auto rows = subsample_rows(n, config.subsample, rng);
    // Softmax probabilities for the sampled rows, reused by every class.
    std::vector<std::vector<double>> probs(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      probs[i] = softmax(scores[rows[i]]);
    }
    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(num_classes));
    for (int k = 0; k < num_classes; ++k) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double onehot = labels[rows[i]] == k ? 1.0 : 0.0;
        residuals[rows[i]] = onehot - probs[i][static_cast<std::size_t>(k)];
      }
      trees.push_back(build_tree(x, rows, residuals, config));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < num_classes; ++k) {
        scores[i][static_cast<std::size_t>(k)] +=
            config.learning_rate *
            trees[static_cast<std::size_t>(k)].predict_row(x.rows[i]);
      }
    }
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

}  // namespace posthoc

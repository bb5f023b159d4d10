#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "posthoc/feature_matrix.hpp"

namespace posthoc {

struct MlpConfig {
  double learning_rate = 0.03;
  int epochs = 500;
  int batch_size = 32;
  std::uint64_t seed = 0;
  bool clamp_unit = true;
};

// Two hidden ReLU layers, both sized to two thirds of the layer before them
// (nearest integer, at least 1), one linear output. Inputs are standardized
// per feature with statistics stored on the model. Trained by plain SGD on
// mean squared error, fixed epoch/batch schedule drawn from the seed.
struct Mlp {
  MlpConfig config;
  std::vector<std::string> feature_names;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  Eigen::MatrixXd w1;  // h1 x d
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // h2 x h1
  Eigen::VectorXd b2;
  Eigen::RowVectorXd w3;  // 1 x h2
  double b3 = 0.0;

  double predict_row(const std::vector<double>& x) const;
  std::vector<double> predict(const FeatureMatrix& x) const;
};

// Hidden widths for a given input size: round(2/3 d), then round(2/3 h1).
std::pair<int, int> mlp_hidden_widths(int input_dim);

// Loss and analytic gradients on a batch of standardized inputs (rows of x).
// The loss is the batch mean of 0.5 * (prediction - target)^2; gradients are
// exactly the derivatives of that quantity, so they can be checked against
// finite differences.
double mlp_loss(const Mlp& model, const Eigen::MatrixXd& x,
                const Eigen::VectorXd& y);

struct MlpGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
  Eigen::RowVectorXd w3;
  double b3 = 0.0;
};

MlpGradients mlp_gradients(const Mlp& model, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y);

// Fresh network with seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights
// and zero biases. Exposed so tests can probe untrained networks.
Mlp init_mlp(int input_dim, const MlpConfig& config);

Mlp train_mlp(const FeatureMatrix& x, const std::vector<double>& y,
              const MlpConfig& config);

}  // namespace posthoc

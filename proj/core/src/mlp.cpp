#include "posthoc/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "posthoc/errors.hpp"
#include "posthoc/rng.hpp"

namespace posthoc {

std::pair<int, int> mlp_hidden_widths(int input_dim) {
  const int h1 = std::max(
      1, static_cast<int>(std::lround(2.0 * input_dim / 3.0)));
  const int h2 = std::max(1, static_cast<int>(std::lround(2.0 * h1 / 3.0)));
  return {h1, h2};
}

namespace {

Eigen::MatrixXd seeded_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      out(r, c) = rng.uniform(-bound, bound);
    }
  }
  return out;
}

struct Forward {
  Eigen::MatrixXd z1, a1, z2, a2;
  Eigen::VectorXd yhat;
};

Forward forward_pass(const Mlp& model, const Eigen::MatrixXd& x) {
  Forward f;
  f.z1 = (x * model.w1.transpose()).rowwise() + model.b1.transpose();
  f.a1 = f.z1.cwiseMax(0.0);
  f.z2 = (f.a1 * model.w2.transpose()).rowwise() + model.b2.transpose();
  f.a2 = f.z2.cwiseMax(0.0);
  f.yhat = (f.a2 * model.w3.transpose()).col(0).array() + model.b3;
  return f;
}

}  // namespace

Mlp init_mlp(int input_dim, const MlpConfig& config) {
  if (input_dim < 1) throw ValidationError("mlp: input_dim must be >= 1");
  if (config.epochs < 0) throw ValidationError("mlp: epochs must be >= 0");
  if (config.batch_size < 1) {
    throw ValidationError("mlp: batch_size must be >= 1");
  }
  if (!(config.learning_rate > 0.0)) {
    throw ValidationError("mlp: learning_rate must be positive");
  }
  const auto [h1, h2] = mlp_hidden_widths(input_dim);
  Mlp model;
  model.config = config;
  model.feature_mean = Eigen::VectorXd::Zero(input_dim);
  model.feature_scale = Eigen::VectorXd::Ones(input_dim);
  Rng rng(config.seed);
  model.w1 = seeded_matrix(h1, input_dim, rng);
  model.b1 = Eigen::VectorXd::Zero(h1);
  model.w2 = seeded_matrix(h2, h1, rng);
  model.b2 = Eigen::VectorXd::Zero(h2);
  model.w3 = seeded_matrix(1, h2, rng);
  model.b3 = 0.0;
  return model;
}

double mlp_loss(const Mlp& model, const Eigen::MatrixXd& x,
                const Eigen::VectorXd& y) {
  const auto f = forward_pass(model, x);
  const Eigen::VectorXd err = f.yhat - y;
  return 0.5 * err.squaredNorm() / static_cast<double>(x.rows());
}

MlpGradients mlp_gradients(const Mlp& model, const Eigen::MatrixXd& x,
                           const Eigen::VectorXd& y) {
  const auto f = forward_pass(model, x);
  const auto batch = static_cast<double>(x.rows());

  const Eigen::VectorXd dy = (f.yhat - y) / batch;
  MlpGradients g;
  g.w3 = dy.transpose() * f.a2;
  g.b3 = dy.sum();

  // ReLU derivative: 1 where the pre-activation is strictly positive.
  const Eigen::MatrixXd da2 = dy * model.w3;
  const Eigen::MatrixXd dz2 =
      da2.cwiseProduct((f.z2.array() > 0.0).cast<double>().matrix());
  g.w2 = dz2.transpose() * f.a1;
  g.b2 = dz2.colwise().sum().transpose();

  const Eigen::MatrixXd da1 = dz2 * model.w2;
  const Eigen::MatrixXd dz1 =
      da1.cwiseProduct((f.z1.array() > 0.0).cast<double>().matrix());
  g.w1 = dz1.transpose() * x;
  g.b1 = dz1.colwise().sum().transpose();
  return g;
}

Mlp train_mlp(const FeatureMatrix& x, const std::vector<double>& y,
              const MlpConfig& config) {
  if (x.rows.size() < 2) {
    throw ValidationError("mlp: need at least two training rows");
  }
  if (y.size() != x.rows.size()) {
    throw ValidationError("mlp: target length differs from rows");
  }
  const auto n = static_cast<Eigen::Index>(x.rows.size());
  const auto dim = static_cast<Eigen::Index>(x.names.size());
  Eigen::MatrixXd raw(n, dim);
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = x.rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != dim) {
      throw ValidationError("mlp: row width differs from feature names");
    }
    for (Eigen::Index j = 0; j < dim; ++j) {
      const double v = row[static_cast<std::size_t>(j)];
      if (!std::isfinite(v)) {
        throw ValidationError("mlp: features must be finite");
      }
      raw(i, j) = v;
    }
    if (!std::isfinite(y[static_cast<std::size_t>(i)])) {
      throw ValidationError("mlp: targets must be finite");
    }
    target(i) = y[static_cast<std::size_t>(i)];
  }

  Mlp model = init_mlp(static_cast<int>(dim), config);
  model.feature_names = x.names;
  model.feature_mean = raw.colwise().mean().transpose();
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double var =
        (raw.col(j).array() - model.feature_mean(j)).square().sum() /
        static_cast<double>(n);
    const double sd = std::sqrt(var);
    model.feature_scale(j) = sd > 1e-12 ? sd : 1.0;
  }
  Eigen::MatrixXd standardized = raw;
  for (Eigen::Index j = 0; j < dim; ++j) {
    standardized.col(j) =
        (raw.col(j).array() - model.feature_mean(j)) / model.feature_scale(j);
  }

  // Separate stream for the epoch permutations so weight initialization and
  // batch order are independently reproducible.
  Rng order_rng(config.seed ^ 0x5851f42d4c957f2dULL);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t count = std::min(batch_size, order.size() - start);
      Eigen::MatrixXd xb(count, dim);
      Eigen::VectorXd yb(count);
      for (std::size_t i = 0; i < count; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) =
            standardized.row(static_cast<Eigen::Index>(order[start + i]));
        yb(static_cast<Eigen::Index>(i)) =
            target(static_cast<Eigen::Index>(order[start + i]));
      }
      const auto g = mlp_gradients(model, xb, yb);
      model.w1 -= config.learning_rate * g.w1;
      model.b1 -= config.learning_rate * g.b1;
      model.w2 -= config.learning_rate * g.w2;
      model.b2 -= config.learning_rate * g.b2;
      model.w3 -= config.learning_rate * g.w3;
      model.b3 -= config.learning_rate * g.b3;
    }
  }
  return model;
}

double Mlp::predict_row(const std::vector<double>& x) const {
  if (static_cast<Eigen::Index>(x.size()) != feature_mean.size()) {
    throw ValidationError("mlp: feature width mismatch");
  }
  Eigen::MatrixXd row(1, feature_mean.size());
  for (Eigen::Index j = 0; j < feature_mean.size(); ++j) {
    row(0, j) = (x[static_cast<std::size_t>(j)] - feature_mean(j)) /
                feature_scale(j);
  }
  const auto f = forward_pass(*this, row);
  double out = f.yhat(0);
  if (config.clamp_unit) out = std::clamp(out, 0.0, 1.0);
  return out;
}

std::vector<double> Mlp::predict(const FeatureMatrix& x) const {
  if (x.names != feature_names) {
    throw ValidationError("mlp: feature layout differs from training");
  }
  std::vector<double> out;
  out.reserve(x.rows.size());
  for (const auto& row : x.rows) out.push_back(predict_row(row));
  return out;
}

}  // namespace posthoc

#include "gcs/fl/task_model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gcs/errors.h"

namespace gcs::fl {
namespace {

// Softmax of logits in place, with max subtraction.
void softmax_inplace(Eigen::Ref<Eigen::VectorXd> z) {
  z.array() -= z.maxCoeff();
  z = z.array().exp();
  z /= z.sum();
}

}  // namespace

TaskModel::TaskModel(std::size_t dimension, int num_classes)
    : dimension_(dimension),
      num_classes_(num_classes),
      params_(Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(static_cast<std::size_t>(num_classes) * (dimension + 1)))) {}

TaskModel TaskModel::initialized(std::size_t dimension, int num_classes,
                                 Rng& rng) {
  TaskModel m(dimension, num_classes);
  const double limit =
      std::sqrt(6.0 / static_cast<double>(dimension + static_cast<std::size_t>(num_classes)));
  std::uniform_real_distribution<double> u(-limit, limit);
  const auto n_weights = static_cast<Eigen::Index>(dimension) * num_classes;
  for (Eigen::Index i = 0; i < n_weights; ++i) m.params_[i] = u(rng);
  return m;
}

TaskModel::WeightMap TaskModel::weight() const {
  return WeightMap(params_.data(), num_classes_,
                   static_cast<Eigen::Index>(dimension_));
}

Eigen::Map<const Eigen::VectorXd> TaskModel::bias() const {
  return {params_.data() + static_cast<Eigen::Index>(dimension_) * num_classes_,
          num_classes_};
}

Eigen::VectorXd TaskModel::predict_proba(
    const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::VectorXd z = weight() * x.transpose() + bias();
  softmax_inplace(z);
  return z;
}

int TaskModel::predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Eigen::VectorXd z = weight() * x.transpose() + bias();
  Eigen::Index best = 0;
  z.maxCoeff(&best);
  return static_cast<int>(best);
}

TaskModel local_train(const TaskModel& global, const Dataset& data,
                      std::span<const std::size_t> shard,
                      const LocalTrainConfig& cfg, Rng& rng) {
  if (shard.empty()) throw EmptyShardError("local_train: empty shard");
  if (cfg.batch_size == 0) throw ConfigError("local_train: batch size must be >= 1");
  TaskModel local = global;
  const auto classes = static_cast<Eigen::Index>(global.num_classes());
  const auto dim = static_cast<Eigen::Index>(global.dimension());
  const Eigen::Index n_weights = classes * dim;
  std::vector<std::size_t> order(shard.begin(), shard.end());
  Eigen::VectorXd grad(local.params().size());
  Eigen::VectorXd z(classes);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);
      grad.setZero();
      Eigen::Map<RowMatrix> grad_w(grad.data(), classes, dim);
      auto grad_b = grad.segment(n_weights, classes);
      for (std::size_t k = start; k < stop; ++k) {
        const auto row = data.features.row(static_cast<Eigen::Index>(order[k]));
        z = local.weight() * row.transpose() + local.bias();
        softmax_inplace(z);
        z[data.labels[order[k]]] -= 1.0;
        grad_w.noalias() += inv_batch * z * row;
        grad_b += inv_batch * z;
      }
      if (cfg.mu != 0.0) grad += cfg.mu * (local.params() - global.params());
      local.params() -= cfg.learning_rate * grad;
    }
  }
  return local;
}

TaskModel aggregate(std::span<const TaskModel> locals) {
  if (locals.empty()) throw DataError("aggregate: no local models");
  for (const TaskModel& m : locals) {
    if (!m.same_shape(locals.front())) {
      throw ShapeError("aggregate: local models have mismatched shapes");
    }
  }
  TaskModel out = locals.front();
  std::vector<double> column(locals.size());
  const double inv_k = 1.0 / static_cast<double>(locals.size());
  for (Eigen::Index i = 0; i < out.params().size(); ++i) {
    for (std::size_t k = 0; k < locals.size(); ++k) column[k] = locals[k].params()[i];
    std::sort(column.begin(), column.end());
    out.params()[i] = std::accumulate(column.begin(), column.end(), 0.0) * inv_k;
  }
  return out;
}

double evaluate_model(const TaskModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.predict(data.features.row(static_cast<Eigen::Index>(i))) ==
        data.labels[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

std::vector<double> example_losses(const TaskModel& model, const Dataset& data,
                                   std::span<const std::size_t> shard) {
  std::vector<double> losses;
  losses.reserve(shard.size());
  for (std::size_t i : shard) {
    const Eigen::VectorXd p =
        model.predict_proba(data.features.row(static_cast<Eigen::Index>(i)));
    losses.push_back(-std::log(std::max(p[data.labels[i]], 1e-300)));
  }
  return losses;
}

}  // namespace gcs::fl

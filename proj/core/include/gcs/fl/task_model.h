#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcs/fl/dataset.h"
#include "gcs/rng.h"

namespace gcs::fl {

// Linear-softmax classifier. Parameters live in one flat vector laid out as
// [weight (classes x dimension, row-major) | bias (classes)].
class TaskModel {
 public:
  TaskModel() = default;
  TaskModel(std::size_t dimension, int num_classes);

  static TaskModel initialized(std::size_t dimension, int num_classes,
                               Rng& rng);

  std::size_t dimension() const { return dimension_; }
  int num_classes() const { return num_classes_; }
  std::size_t param_count() const {
    return static_cast<std::size_t>(params_.size());
  }

  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  using WeightMap = Eigen::Map<const RowMatrix>;
  WeightMap weight() const;
  Eigen::Map<const Eigen::VectorXd> bias() const;

  // Class probabilities for one feature row.
  Eigen::VectorXd predict_proba(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  bool same_shape(const TaskModel& other) const {
    return dimension_ == other.dimension_ && num_classes_ == other.num_classes_;
  }

 private:
  std::size_t dimension_ = 0;
  int num_classes_ = 0;
  Eigen::VectorXd params_;
};

struct LocalTrainConfig {
  int epochs = 5;
  double learning_rate = 0.1;
  double mu = 0.0;
  std::size_t batch_size = 32;
};

// `epochs` passes of shuffled mini-batch SGD on
//   mean cross-entropy(batch) + (mu/2) ||w - w_global||^2.
// Throws EmptyShardError on an empty shard.
TaskModel local_train(const TaskModel& global, const Dataset& data,
                      std::span<const std::size_t> shard,
                      const LocalTrainConfig& cfg, Rng& rng);

// Element-wise mean. Each coordinate is summed in sorted order, so the
// result does not depend on the order of `locals`.
// Throws ShapeError on mismatched models, DataError on an empty list.
TaskModel aggregate(std::span<const TaskModel> locals);

// Fraction of samples whose argmax prediction equals the label.
double evaluate_model(const TaskModel& model, const Dataset& data);

// Per-example cross-entropy losses of `model` over `shard`.
std::vector<double> example_losses(const TaskModel& model, const Dataset& data,
                                   std::span<const std::size_t> shard);

}  // namespace gcs::fl

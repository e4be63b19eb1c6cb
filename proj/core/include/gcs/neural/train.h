#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "gcs/collectors/records.h"
#include "gcs/neural/bundle.h"

namespace gcs::neural {

struct TrainConfig {
  std::size_t batch_size = 1024;
  double learning_rate = 0.001;
  double alpha = 0.8;
  std::size_t epochs = 200;
  // Stop after this many epochs without an improvement of at least
  // min_delta in the epoch loss; 0 disables early stopping.
  std::size_t patience = 20;
  double min_delta = 1e-4;
  std::uint64_t seed = 0;
  std::size_t embedding = 32;
  std::size_t hidden = 64;
  std::size_t evaluator_hidden = 200;
  // Forward/backward in float with double master weights and Adam state.
  bool single_precision = false;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double sequence_loss = 0.0;
  double score_loss = 0.0;
};

struct TrainResult {
  ModelBundle bundle;
  std::vector<EpochStats> history;
  bool degenerate_normalization = false;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Adam (0.9, 0.999, 1e-8) on the joint loss over shuffled mini-batches.
// Scores are min-max normalized over the corpus first; a constant corpus
// trains toward 0.5 and sets degenerate_normalization.
// Throws DataError on an empty corpus.
TrainResult train(const collect::RecordSet& records, std::size_t pool_size,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Adam state over a ParamSet.
class Adam {
 public:
  Adam(const ModelSizes& sizes, double learning_rate, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step(ParamSet& params, const ParamSet& grads);

 private:
  ParamSet m_;
  ParamSet v_;
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  long steps_ = 0;
};

}  // namespace gcs::neural

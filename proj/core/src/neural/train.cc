#include "gcs/neural/train.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gcs/errors.h"
#include "gcs/neural/seq2seq.h"
#include "gcs/rng.h"

namespace gcs::neural {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("train: alpha must be in [0, 1]");
  if (embedding == 0 || hidden == 0 || evaluator_hidden == 0) {
    throw ConfigError("train: layer sizes must be >= 1");
  }
}

Adam::Adam(const ModelSizes& sizes, double learning_rate, double beta1,
           double beta2, double eps)
    : m_(ParamSet::zeros(sizes)),
      v_(ParamSet::zeros(sizes)),
      lr_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      eps_(eps) {}

void Adam::step(ParamSet& params, const ParamSet& grads) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  auto p = params.entries();
  auto g = grads.entries();
  auto m = m_.entries();
  auto v = v_.entries();
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto& mk = *m[k].second;
    auto& vk = *v[k].second;
    const auto& gk = *g[k].second;
    mk = beta1_ * mk + (1.0 - beta1_) * gk;
    vk = beta2_ * vk + (1.0 - beta2_) * gk.cwiseProduct(gk);
    p[k].second->array() -=
        lr_ * (mk.array() / c1) / ((vk.array() / c2).sqrt() + eps_);
  }
}

TrainResult train(const collect::RecordSet& records, std::size_t pool_size,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (records.empty()) throw DataError("train: empty corpus");
  for (const auto& r : records.records) r.selection.validate(pool_size);

  ModelSizes sizes{pool_size, cfg.embedding, cfg.hidden, cfg.evaluator_hidden};
  TrainResult result{ModelBundle::initialized(sizes, cfg.seed), {}, false};
  ModelBundle& bundle = result.bundle;

  const auto [lo, hi] = std::minmax_element(
      records.records.begin(), records.records.end(),
      [](const auto& a, const auto& b) { return a.score < b.score; });
  bundle.normalization = Normalization{lo->score, hi->score};
  result.degenerate_normalization = bundle.normalization.degenerate();

  std::vector<ExampleView> examples;
  examples.reserve(records.size());
  for (const auto& r : records.records) {
    examples.push_back({r.selection.span(), bundle.normalization.normalize(r.score)});
  }

  Adam adam(sizes, cfg.learning_rate);
  ParamSetF params32 = ParamSetF::zeros(sizes);
  ParamSetF grads32 = ParamSetF::zeros(sizes);
  Rng rng = make_rng(cfg.seed, "train-shuffle");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<ExampleView> batch;
  double best = INFINITY;
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats{epoch, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(examples[order[i]]);
      LossParts loss;
      if (cfg.single_precision) {
        cast_params(bundle.params, params32);
        loss = backward_f32(params32, grads32, bundle.vocab(), batch, cfg.alpha);
        cast_params(grads32, bundle.grads);
      } else {
        loss = backward(bundle, batch, cfg.alpha).loss;
      }
      if (!std::isfinite(loss.total) || !bundle.grads.all_finite()) {
        throw NumericError("train: non-finite loss or gradient at epoch " +
                           std::to_string(epoch));
      }
      const double w = static_cast<double>(stop - start);
      stats.loss += loss.total * w;
      stats.sequence_loss += loss.sequence * w;
      stats.score_loss += loss.score * w;
      adam.step(bundle.params, bundle.grads);
    }
    const double n = static_cast<double>(order.size());
    stats.loss /= n;
    stats.sequence_loss /= n;
    stats.score_loss /= n;
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    if (stats.loss < best - cfg.min_delta) {
      best = stats.loss;
      since_best = 0;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  bundle.grads.set_zero();
  return result;
}

}  // namespace gcs::neural

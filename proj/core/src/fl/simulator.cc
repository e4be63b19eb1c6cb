#include "gcs/fl/simulator.h"

#include "gcs/errors.h"
#include "gcs/rng.h"

namespace gcs::fl {

void SimConfig::validate() const {
  if (num_clients == 0) throw ConfigError("sim: num_clients must be >= 1");
  if (participants == 0 || participants > num_clients) {
    throw ConfigError("sim: participants must be in [1, num_clients]");
  }
  if (rounds == 0) throw ConfigError("sim: rounds must be >= 1");
  if (local_epochs < 1) throw ConfigError("sim: local_epochs must be >= 1");
  if (!(mu >= 0.0)) throw ConfigError("sim: mu must be >= 0");
  if (!(learning_rate >= 0.0)) throw ConfigError("sim: learning_rate must be >= 0");
  if (batch_size == 0) throw ConfigError("sim: batch_size must be >= 1");
}

FlSession::FlSession(std::shared_ptr<const Environment> env, std::uint64_t seed)
    : env_(std::move(env)), seed_(seed) {
  Rng init = make_rng(seed_, "task-model-init");
  initial_ = TaskModel::initialized(env_->train.dimension(),
                                    env_->train.num_classes, init);
  model_ = initial_;
}

double FlSession::device_round_time(DeviceId id) const {
  const DeviceProfile& d = env_->pool.at(id);
  const double avail = d.availability_at(round_);
  return avail * d.comm_latency_s +
         avail * d.comp_latency_s_per_epoch * env_->sim.local_epochs;
}

RoundOutcome FlSession::run_round(const ClientSelection& selection,
                                  const Budget& budget) {
  selection.validate(env_->pool.size());
  const SimConfig& sim = env_->sim;
  const LocalTrainConfig local_cfg{sim.local_epochs, sim.learning_rate, sim.mu,
                                   sim.batch_size};

  RoundOutcome out;
  out.round = round_;
  out.selection = selection;
  std::vector<TaskModel> locals;
  locals.reserve(selection.size());
  for (DeviceId id : selection.tokens()) {
    const Shard& shard = env_->shards.at(static_cast<std::size_t>(id));
    out.client_losses.push_back({id, example_losses(model_, env_->train, shard)});
    Rng rng = make_rng(seed_, "local-train",
                       round_ * env_->pool.size() + static_cast<std::size_t>(id));
    locals.push_back(local_train(model_, env_->train, shard, local_cfg, rng));
  }
  model_ = aggregate(locals);
  out.accuracy = evaluate_model(model_, env_->validation);
  out.score = score_selection(selection, env_->pool, round_, sim.local_epochs,
                              out.accuracy, budget);
  ++round_;
  return out;
}

}  // namespace gcs::fl

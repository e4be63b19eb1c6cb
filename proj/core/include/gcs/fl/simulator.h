#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "gcs/fl/dataset.h"
#include "gcs/fl/partition.h"
#include "gcs/fl/task_model.h"
#include "gcs/model/scoring.h"
#include "gcs/model/types.h"

namespace gcs::fl {

struct SimConfig {
  std::size_t num_clients = 100;
  std::size_t participants = 10;
  std::size_t rounds = 50;
  int local_epochs = 5;
  double learning_rate = 0.1;
  double mu = 0.0;
  std::size_t batch_size = 32;

  void validate() const;
};

// Everything a session shares with every other session on the same system:
// device pool, train/validation data and client shards. Immutable once built.
struct Environment {
  DevicePool pool;
  Dataset train;
  Dataset validation;
  std::vector<Shard> shards;
  SimConfig sim;
};

struct ClientLosses {
  DeviceId client = 0;
  std::vector<double> losses;
};

struct RoundOutcome {
  std::size_t round = 0;
  ClientSelection selection;
  double accuracy = 0.0;
  ScoreBreakdown score;
  // Per-example losses of the participants' shards under the model each
  // participant received, in selection order.
  std::vector<ClientLosses> client_losses;
};

// Mutable per-session state: the global model and the round counter.
class FlSession {
 public:
  FlSession(std::shared_ptr<const Environment> env, std::uint64_t seed);

  const Environment& env() const { return *env_; }
  const TaskModel& global_model() const { return model_; }
  std::size_t round() const { return round_; }
  std::uint64_t seed() const { return seed_; }

  // Trains the selected clients from the current global model, averages them
  // and scores the round. Fully determined by (seed, round, selection set).
  RoundOutcome run_round(const ClientSelection& selection,
                         const Budget& budget);

  // Round latency each device would see this round: the Oort t_i estimate.
  double device_round_time(DeviceId id) const;

  // Restores the global model drawn at construction; the round counter keeps
  // running so availability and local-train streams still advance.
  void reset_model() { model_ = initial_; }

 private:
  std::shared_ptr<const Environment> env_;
  std::uint64_t seed_;
  TaskModel initial_;
  TaskModel model_;
  std::size_t round_ = 0;
};

}  // namespace gcs::fl

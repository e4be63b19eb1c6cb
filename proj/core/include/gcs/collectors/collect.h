#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gcs/collectors/policies.h"
#include "gcs/collectors/records.h"
#include "gcs/fl/simulator.h"

namespace gcs::collect {

struct CollectorSpec {
  PolicyKind kind = PolicyKind::kRandom;
  std::size_t sessions = 100;
};

// Trajectory-level metadata of one collection session.
struct SessionSummary {
  std::string collector;
  std::uint64_t session_seed = 0;
  double favor_reward = 0.0;
  double mean_score = 0.0;
  double final_accuracy = 0.0;
};

struct CollectResult {
  RecordSet records;
  std::vector<SessionSummary> sessions;
};

// Seed of session `index` of `collector` under `root_seed`.
std::uint64_t session_seed(std::uint64_t root_seed, PolicyKind collector,
                           std::size_t index);

// Runs every collector for its session count on fresh FL sessions and keeps
// one record per round, ordered by (collector, session, round). Every stored
// score is re-derived from its breakdown before returning. With
// `fixed_reference` every round trains from the session's initial model, so
// a record's perf reflects the selection alone rather than the trajectory.
CollectResult collect_records(std::shared_ptr<const fl::Environment> env,
                              const std::vector<CollectorSpec>& collectors,
                              const PolicyConfig& policy_cfg,
                              const Budget& budget, std::uint64_t root_seed,
                              bool fixed_reference = false);

}  // namespace gcs::collect

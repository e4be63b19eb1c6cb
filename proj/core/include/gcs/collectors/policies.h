#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gcs/fl/simulator.h"
#include "gcs/model/types.h"
#include "gcs/rng.h"

namespace gcs::collect {

// Per-client bookkeeping for Oort.
struct ClientStats {
  std::vector<double> losses;  // B_i: recent per-example losses
  double round_time_s = 1.0;   // t_i
  int explore_count = 0;

  bool explored() const { return !losses.empty(); }
};

struct OortConfig {
  double epsilon = 0.1;
  double deadline_s = 25.0;  // preferred round duration T
  double alpha = 2.0;        // straggler penalty exponent
};

struct FavorConfig {
  double xi = 64.0;          // Xi > 1
  double omega_target = 0.9; // Omega
  double gamma = 0.9;        // 0 < gamma <= 1

  void validate() const;
};

enum class UtilityShape { kIdentity, kLog1p };

struct FedMarlConfig {
  double w1 = 1.0;
  double w2 = 0.01;
  double w3 = 0.01;
  UtilityShape utility = UtilityShape::kIdentity;

  void validate() const;
};

struct ExploreConfig {
  double epsilon = 0.2;
  double step = 0.1;
  // Selection sizes tried by the length learner: [min_fraction*T, max_factor*T]
  // clamped to [1, J].
  double min_fraction = 0.5;
  double max_factor = 2.0;
};

// Uniform sample of `count` distinct ids from [0, pool_size).
// Throws InfeasibleError when count > pool_size or count == 0.
ClientSelection random_select(std::size_t pool_size, std::size_t count, Rng& rng);
ClientSelection random_select(std::size_t pool_size, std::size_t count,
                              std::uint64_t seed);

// |B| * sqrt(mean(loss^2)) * (T / t)^(1[T < t] * alpha).
// Throws DataError on an empty loss list.
double oort_utility(const ClientStats& stats, double deadline_s, double alpha);

// ceil((1 - eps) T) clients by descending utility (ties -> lower id) plus
// floor(eps T) uniformly drawn unexplored clients. Unexplored clients fill
// exploitation slots when too few clients are explored, and explored ones
// fill exploration slots when none are left unexplored.
ClientSelection oort_select(std::span<const ClientStats> stats,
                            std::size_t count, const OortConfig& cfg, Rng& rng);

// sum_t gamma^(t-1) (Xi^(omega_t - Omega) - 1).
double favor_reward(std::span<const double> accuracy_path,
                    const FavorConfig& cfg);

// w1 [U(acc_t) - U(acc_prev)] - w2 H_t - w3 B_t.
double fedmarl_reward(double acc_t, double acc_prev, double latency_h,
                      double comm_cost_b, const FedMarlConfig& cfg);

// Running value estimate per client.
struct ValueTable {
  std::vector<double> values;
  double step = 0.1;

  explicit ValueTable(std::size_t clients = 0, double step_size = 0.1)
      : values(clients, 0.0), step(step_size) {}

  // Each participant's estimate moves toward reward / |selection| by `step`.
  void update(const ClientSelection& selection, double reward);
};

// epsilon-greedy: per slot, with probability epsilon a uniformly drawn
// unchosen client, else the highest-valued unchosen client (ties -> lower id).
ClientSelection explore_select(const ValueTable& table, std::size_t count,
                               double epsilon, Rng& rng);

// A selection policy driven round by round against one FL session.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual ClientSelection select(const fl::FlSession& session) = 0;
  virtual void observe(const fl::FlSession& session,
                       const fl::RoundOutcome& outcome) = 0;
};

enum class PolicyKind { kRandom, kOort, kExplore };

std::string to_string(PolicyKind kind);
PolicyKind parse_policy_kind(const std::string& name);

struct PolicyConfig {
  OortConfig oort;
  ExploreConfig explore;
  FedMarlConfig fedmarl;
  FavorConfig favor;
};

// `target` is the per-round participant count T; `seed` seeds the policy's
// own random stream.
std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyConfig& cfg,
                                    std::size_t pool_size, std::size_t target,
                                    std::uint64_t seed);

}  // namespace gcs::collect

#include "gcs/collectors/policies.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "gcs/errors.h"
#include "gcs/model/scoring.h"

namespace gcs::collect {
namespace {

// Ids ordered by descending score, ties broken toward the lower id.
std::vector<DeviceId> rank_descending(std::span<const double> scores) {
  std::vector<DeviceId> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](DeviceId a, DeviceId b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return ids;
}

DeviceId draw_from(std::vector<DeviceId>& pool, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  const std::size_t i = pick(rng);
  const DeviceId id = pool[i];
  pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(i));
  return id;
}

double apply_utility(double acc, UtilityShape shape) {
  return shape == UtilityShape::kLog1p ? std::log1p(acc) : acc;
}

}  // namespace

void FavorConfig::validate() const {
  if (!(xi > 1.0)) throw ConfigError("favor: xi must be > 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("favor: gamma must be in (0, 1]");
}

void FedMarlConfig::validate() const {
  if (!(w1 >= 0.0 && w2 >= 0.0 && w3 >= 0.0)) {
    throw ConfigError("fedmarl: weights must be non-negative");
  }
}

ClientSelection random_select(std::size_t pool_size, std::size_t count, Rng& rng) {
  if (count == 0 || count > pool_size) {
    throw InfeasibleError("random_select: cannot pick " + std::to_string(count) +
                          " of " + std::to_string(pool_size) + " clients");
  }
  std::vector<DeviceId> ids(pool_size);
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
    std::swap(ids[i], ids[pick(rng)]);
  }
  ids.resize(count);
  return ClientSelection(std::move(ids));
}

ClientSelection random_select(std::size_t pool_size, std::size_t count,
                              std::uint64_t seed) {
  Rng rng(seed);
  return random_select(pool_size, count, rng);
}

double oort_utility(const ClientStats& stats, double deadline_s, double alpha) {
  if (stats.losses.empty()) throw DataError("oort_utility: empty loss list");
  double sq = 0.0;
  for (double l : stats.losses) sq += l * l;
  const double n = static_cast<double>(stats.losses.size());
  double util = n * std::sqrt(sq / n);
  if (deadline_s < stats.round_time_s) {
    util *= std::pow(deadline_s / stats.round_time_s, alpha);
  }
  return util;
}

ClientSelection oort_select(std::span<const ClientStats> stats,
                            std::size_t count, const OortConfig& cfg, Rng& rng) {
  const std::size_t pool_size = stats.size();
  if (count == 0 || count > pool_size) {
    throw InfeasibleError("oort_select: cannot pick " + std::to_string(count) +
                          " of " + std::to_string(pool_size) + " clients");
  }
  const auto exploit_slots = static_cast<std::size_t>(
      std::ceil((1.0 - cfg.epsilon) * static_cast<double>(count) - 1e-12));
  const std::size_t explore_slots = count - std::min(count, exploit_slots);

  std::vector<double> utility(pool_size, -1.0);
  std::vector<DeviceId> unexplored;
  for (std::size_t i = 0; i < pool_size; ++i) {
    if (stats[i].explored()) {
      utility[i] = oort_utility(stats[i], cfg.deadline_s, cfg.alpha);
    } else {
      unexplored.push_back(static_cast<DeviceId>(i));
    }
  }
  std::vector<DeviceId> ranked;
  for (DeviceId id : rank_descending(utility)) {
    if (stats[static_cast<std::size_t>(id)].explored()) ranked.push_back(id);
  }

  std::vector<DeviceId> chosen;
  std::size_t next_ranked = 0;
  const std::size_t exploit = count - explore_slots;
  while (chosen.size() < exploit && next_ranked < ranked.size()) {
    chosen.push_back(ranked[next_ranked++]);
  }
  while (chosen.size() < count && !unexplored.empty()) {
    chosen.push_back(draw_from(unexplored, rng));
  }
  while (chosen.size() < count) chosen.push_back(ranked[next_ranked++]);
  return ClientSelection(std::move(chosen));
}

double favor_reward(std::span<const double> accuracy_path,
                    const FavorConfig& cfg) {
  double reward = 0.0;
  double discount = 1.0;
  for (double omega : accuracy_path) {
    reward += discount * (std::pow(cfg.xi, omega - cfg.omega_target) - 1.0);
    discount *= cfg.gamma;
  }
  return reward;
}

double fedmarl_reward(double acc_t, double acc_prev, double latency_h,
                      double comm_cost_b, const FedMarlConfig& cfg) {
  return cfg.w1 * (apply_utility(acc_t, cfg.utility) -
                   apply_utility(acc_prev, cfg.utility)) -
         cfg.w2 * latency_h - cfg.w3 * comm_cost_b;
}

void ValueTable::update(const ClientSelection& selection, double reward) {
  const double share = reward / static_cast<double>(selection.size());
  for (DeviceId id : selection.tokens()) {
    double& v = values.at(static_cast<std::size_t>(id));
    v += step * (share - v);
  }
}

ClientSelection explore_select(const ValueTable& table, std::size_t count,
                               double epsilon, Rng& rng) {
  const std::size_t pool_size = table.values.size();
  if (count == 0 || count > pool_size) {
    throw InfeasibleError("explore_select: cannot pick " + std::to_string(count) +
                          " of " + std::to_string(pool_size) + " clients");
  }
  std::vector<DeviceId> greedy_order = rank_descending(table.values);
  std::vector<bool> taken(pool_size, false);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<DeviceId> chosen;
  std::size_t cursor = 0;
  for (std::size_t slot = 0; slot < count; ++slot) {
    DeviceId id;
    if (coin(rng) < epsilon) {
      std::vector<DeviceId> free;
      for (std::size_t i = 0; i < pool_size; ++i) {
        if (!taken[i]) free.push_back(static_cast<DeviceId>(i));
      }
      id = draw_from(free, rng);
    } else {
      while (taken[static_cast<std::size_t>(greedy_order[cursor])]) ++cursor;
      id = greedy_order[cursor];
    }
    taken[static_cast<std::size_t>(id)] = true;
    chosen.push_back(id);
  }
  return ClientSelection(std::move(chosen));
}

namespace {

class RandomPolicy final : public Policy {
 public:
  RandomPolicy(std::size_t pool_size, std::size_t target, std::uint64_t seed)
      : pool_size_(pool_size), target_(target), rng_(seed) {}
  std::string name() const override { return "random"; }
  ClientSelection select(const fl::FlSession&) override {
    return random_select(pool_size_, target_, rng_);
  }
  void observe(const fl::FlSession&, const fl::RoundOutcome&) override {}

 private:
  std::size_t pool_size_;
  std::size_t target_;
  Rng rng_;
};

class OortPolicy final : public Policy {
 public:
  OortPolicy(const OortConfig& cfg, std::size_t pool_size, std::size_t target,
             std::uint64_t seed)
      : cfg_(cfg), stats_(pool_size), target_(target), rng_(seed) {}
  std::string name() const override { return "oort"; }
  ClientSelection select(const fl::FlSession& session) override {
    for (std::size_t i = 0; i < stats_.size(); ++i) {
      stats_[i].round_time_s = session.device_round_time(static_cast<DeviceId>(i));
    }
    return oort_select(stats_, target_, cfg_, rng_);
  }
  void observe(const fl::FlSession&, const fl::RoundOutcome& outcome) override {
    for (const fl::ClientLosses& c : outcome.client_losses) {
      ClientStats& s = stats_[static_cast<std::size_t>(c.client)];
      s.losses = c.losses;
      ++s.explore_count;
    }
  }

 private:
  OortConfig cfg_;
  std::vector<ClientStats> stats_;
  std::size_t target_;
  Rng rng_;
};

// Tabular epsilon-greedy learner standing in for the multi-agent RL
// collector. It learns which clients to pick and how many, from the
// per-round FedMarl reward.
class ExplorePolicy final : public Policy {
 public:
  ExplorePolicy(const ExploreConfig& cfg, const FedMarlConfig& reward,
                std::size_t pool_size, std::size_t target, std::uint64_t seed)
      : cfg_(cfg), reward_(reward), clients_(pool_size, cfg.step), rng_(seed) {
    const auto t = static_cast<double>(target);
    min_len_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(cfg.min_fraction * t)), 1, pool_size);
    max_len_ = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::floor(cfg.max_factor * t)), min_len_, pool_size);
    lengths_ = ValueTable(max_len_ - min_len_ + 1, cfg.step);
  }
  std::string name() const override { return "explore"; }

  ClientSelection select(const fl::FlSession& session) override {
    if (!prev_acc_) {
      prev_acc_ = fl::evaluate_model(session.global_model(), session.env().validation);
    }
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::size_t slot;
    if (coin(rng_) < cfg_.epsilon) {
      slot = std::uniform_int_distribution<std::size_t>(0, lengths_.values.size() - 1)(rng_);
    } else {
      slot = static_cast<std::size_t>(
          std::max_element(lengths_.values.begin(), lengths_.values.end()) -
          lengths_.values.begin());
    }
    return explore_select(clients_, min_len_ + slot, cfg_.epsilon, rng_);
  }

  void observe(const fl::FlSession&, const fl::RoundOutcome& outcome) override {
    const double reward = fedmarl_reward(
        outcome.accuracy, *prev_acc_, outcome.score.total_latency_s,
        static_cast<double>(outcome.selection.size()), reward_);
    prev_acc_ = outcome.accuracy;
    clients_.update(outcome.selection, reward);
    double& v = lengths_.values[outcome.selection.size() - min_len_];
    v += cfg_.step * (reward - v);
  }

 private:
  ExploreConfig cfg_;
  FedMarlConfig reward_;
  ValueTable clients_;
  ValueTable lengths_;
  std::size_t min_len_ = 1;
  std::size_t max_len_ = 1;
  std::optional<double> prev_acc_;
  Rng rng_;
};

}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kOort: return "oort";
    case PolicyKind::kExplore: return "explore";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(const std::string& name) {
  if (name == "random") return PolicyKind::kRandom;
  if (name == "oort") return PolicyKind::kOort;
  if (name == "explore") return PolicyKind::kExplore;
  throw ConfigError("unknown collector policy '" + name + "'");
}

std::unique_ptr<Policy> make_policy(PolicyKind kind, const PolicyConfig& cfg,
                                    std::size_t pool_size, std::size_t target,
                                    std::uint64_t seed) {
  switch (kind) {
    case PolicyKind::kRandom:
      return std::make_unique<RandomPolicy>(pool_size, target, seed);
    case PolicyKind::kOort:
      return std::make_unique<OortPolicy>(cfg.oort, pool_size, target, seed);
    case PolicyKind::kExplore:
      return std::make_unique<ExplorePolicy>(cfg.explore, cfg.fedmarl, pool_size,
                                             target, seed);
  }
  throw ConfigError("unknown policy kind");
}

}  // namespace gcs::collect

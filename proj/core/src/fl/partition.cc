#include "gcs/fl/partition.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "gcs/errors.h"
#include "gcs/rng.h"

namespace gcs::fl {

void PartitionConfig::validate() const {
  if (mode == PartitionMode::kDirichlet && !(beta > 0.0 && std::isfinite(beta))) {
    throw ConfigError("dirichlet partition needs beta > 0");
  }
}

std::vector<Shard> partition_dataset(const Dataset& data,
                                     std::size_t num_clients,
                                     const PartitionConfig& cfg) {
  cfg.validate();
  if (num_clients == 0) throw InfeasibleError("partition needs >= 1 client");
  if (num_clients > data.size()) {
    throw InfeasibleError("cannot split " + std::to_string(data.size()) +
                          " samples across " + std::to_string(num_clients) +
                          " clients");
  }
  Rng rng = make_rng(cfg.seed, "partition");
  std::vector<Shard> shards(num_clients);

  if (cfg.mode == PartitionMode::kIid) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < order.size(); ++i) {
      shards[i % num_clients].push_back(order[i]);
    }
  } else {
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
      by_class[data.labels[i]].push_back(i);
    }
    std::gamma_distribution<double> gamma(cfg.beta, 1.0);
    std::vector<double> weights(num_clients);
    for (auto& [label, members] : by_class) {
      std::shuffle(members.begin(), members.end(), rng);
      double total = 0.0;
      for (double& w : weights) {
        w = gamma(rng);
        total += w;
      }
      if (!(total > 0.0)) {
        // Every draw underflowed; fall back to one uniformly chosen client.
        std::fill(weights.begin(), weights.end(), 0.0);
        weights[std::uniform_int_distribution<std::size_t>(0, num_clients - 1)(rng)] = 1.0;
        total = 1.0;
      }
      // Cumulative proportions -> contiguous cut points in the shuffled class.
      double cumulative = 0.0;
      std::size_t begin = 0;
      for (std::size_t k = 0; k < num_clients; ++k) {
        cumulative += weights[k] / total;
        std::size_t end = k + 1 == num_clients
                              ? members.size()
                              : static_cast<std::size_t>(std::llround(
                                    cumulative * static_cast<double>(members.size())));
        end = std::clamp(end, begin, members.size());
        shards[k].insert(shards[k].end(), members.begin() + static_cast<std::ptrdiff_t>(begin),
                         members.begin() + static_cast<std::ptrdiff_t>(end));
        begin = end;
      }
    }
    for (Shard& shard : shards) {
      if (!shard.empty()) continue;
      auto largest = std::max_element(
          shards.begin(), shards.end(),
          [](const Shard& a, const Shard& b) { return a.size() < b.size(); });
      shard.push_back(largest->back());
      largest->pop_back();
    }
  }
  for (Shard& shard : shards) std::sort(shard.begin(), shard.end());
  return shards;
}

double label_entropy(const Dataset& data, const Shard& shard) {
  if (shard.empty()) return 0.0;
  std::map<int, std::size_t> counts;
  for (std::size_t i : shard) ++counts[data.labels[i]];
  double h = 0.0;
  for (const auto& [label, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(shard.size());
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace gcs::fl

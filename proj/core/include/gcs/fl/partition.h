#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gcs/fl/dataset.h"

namespace gcs::fl {

enum class PartitionMode { kIid, kDirichlet };

struct PartitionConfig {
  PartitionMode mode = PartitionMode::kDirichlet;
  double beta = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

using Shard = std::vector<std::size_t>;

// Splits sample indices into `num_clients` disjoint shards covering the
// dataset. Dirichlet mode draws each class's client proportions from
// Dir_J(beta); a client left empty then takes one sample from the currently
// largest shard so every shard is non-empty.
// Throws InfeasibleError when num_clients exceeds the sample count.
std::vector<Shard> partition_dataset(const Dataset& data,
                                     std::size_t num_clients,
                                     const PartitionConfig& cfg);

// Shannon entropy (nats) of a shard's label distribution.
double label_entropy(const Dataset& data, const Shard& shard);

}  // namespace gcs::fl

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gcs/collectors/collect.h"
#include "gcs/fl/dataset.h"
#include "gcs/fl/devices.h"
#include "gcs/fl/partition.h"
#include "gcs/fl/simulator.h"
#include "gcs/latent/search.h"
#include "gcs/model/types.h"
#include "gcs/neural/train.h"

namespace gcs::harness {

struct DataConfig {
  fl::MixtureSpec mixture;
  // When non-empty, samples come from this CSV (f0..f{D-1},label) instead of
  // the generated mixture, split by validation_fraction.
  std::string csv_path;
  double validation_fraction = 0.2;
};

struct CollectConfig {
  std::vector<collect::CollectorSpec> collectors{
      {collect::PolicyKind::kOort, 100},
      {collect::PolicyKind::kExplore, 100},
      {collect::PolicyKind::kRandom, 100}};
  std::size_t shuffles = 25;
  // Score every round from the session's initial model instead of its
  // running trajectory.
  bool fixed_reference = false;
  collect::PolicyConfig policies;
};

struct GcsRunConfig {
  latent::OptConfig opt;
  bool auto_decode_length = true;
  // Re-derive corpus scores with the current round's latency before ranking
  // the top-K starts.
  bool rescore_by_round = true;
  // Append each realized GCS round to the records it ranks from.
  bool online_records = true;
  // A realized round supersedes earlier records of the same client set, so
  // rankings reflect the latest observation of each set.
  bool supersede_observed = true;
};

struct EvalConfig {
  std::size_t seeds = 1;
  std::optional<double> target_accuracy;
};

// Full experiment description. Defaults reproduce the reference setting:
// J = 100, T = 10, r = 50, 5 local epochs, 3 collectors x 100 sessions.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  fl::PoolSpec pool;
  std::vector<DeviceProfile> explicit_profiles;
  DataConfig data;
  fl::PartitionConfig partition;
  fl::SimConfig sim;
  Budget budget;
  CollectConfig collect;
  neural::TrainConfig train;
  GcsRunConfig gcs;
  EvalConfig eval;

  // Checks every nested invariant; throws ConfigError.
  void validate() const;

  std::size_t num_clients() const { return sim.num_clients; }
  latent::OptConfig effective_opt() const;
};

// Parses a JSON document of nested tables. Absent keys keep their defaults;
// unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

// Canonical JSON of the complete (defaults filled) configuration.
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

// Stage hashes (16 hex digits) over the sections each stage depends on.
std::string environment_hash(const ExperimentConfig& cfg);
std::string corpus_hash(const ExperimentConfig& cfg);
std::string model_hash(const ExperimentConfig& cfg);
std::string run_hash(const ExperimentConfig& cfg);

}  // namespace gcs::harness

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gcs/collectors/collect.h"
#include "gcs/fl/simulator.h"
#include "gcs/harness/config.h"
#include "gcs/neural/bundle.h"

namespace gcs::harness {

using Log = std::function<void(const std::string&)>;

// Pool, data and shards for the config's root seed. Explicit profiles win
// over the archetype generator; a CSV path wins over the generated mixture.
std::shared_ptr<const fl::Environment> build_environment(const ExperimentConfig& cfg);

// Session seed of evaluation run `index`. Every policy evaluated under the
// same index shares model init and local-training streams (paired seeds).
std::uint64_t eval_seed(const ExperimentConfig& cfg, std::size_t index);

// Runs the configured collectors. Not persisted.
collect::CollectResult run_collection(const ExperimentConfig& cfg,
                                      std::shared_ptr<const fl::Environment> env);

// The training corpus: records followed by `shuffles` permuted copies each.
collect::RecordSet training_corpus(const ExperimentConfig& cfg,
                                   const collect::RecordSet& records);

neural::ModelBundle train_model(const ExperimentConfig& cfg,
                                const collect::RecordSet& records,
                                const Log& log = {},
                                std::vector<std::string>* epoch_csv = nullptr);

// Artifact files inside an output directory.
struct ArtifactPaths {
  std::filesystem::path dir;
  std::filesystem::path records() const { return dir / "records.jsonl"; }
  std::filesystem::path collect_manifest() const { return dir / "collect_manifest.json"; }
  std::filesystem::path sessions() const { return dir / "sessions.csv"; }
  std::filesystem::path checkpoint() const { return dir / "model.json"; }
  std::filesystem::path train_log() const { return dir / "train_log.csv"; }
};

// Collects and writes records + manifest + session summaries.
collect::RecordSet write_collection(const ExperimentConfig& cfg,
                                    std::shared_ptr<const fl::Environment> env,
                                    const ArtifactPaths& paths, const Log& log = {});

// Reads records written for exactly this config. Throws StaleArtifactError
// if the manifest's corpus hash or the records digest disagree.
collect::RecordSet read_collection(const ExperimentConfig& cfg,
                                   const ArtifactPaths& paths);

// Trains on the stored records and writes the checkpoint and epoch log.
neural::ModelBundle write_model(const ExperimentConfig& cfg,
                                const collect::RecordSet& records,
                                const ArtifactPaths& paths, const Log& log = {});

// Loads a checkpoint whose model-hash tag matches; StaleArtifactError
// otherwise.
neural::ModelBundle read_model(const ExperimentConfig& cfg, const ArtifactPaths& paths);

// Reads the stored corpus when present, else collects and writes it.
collect::RecordSet ensure_records(const ExperimentConfig& cfg,
                                  std::shared_ptr<const fl::Environment> env,
                                  const ArtifactPaths& paths, const Log& log = {});
// Reads the stored checkpoint when present, else trains and writes it.
neural::ModelBundle ensure_model(const ExperimentConfig& cfg,
                                 const collect::RecordSet& records,
                                 const ArtifactPaths& paths, const Log& log = {});

// Reuses artifacts that exist for this config, produces the missing ones and
// refuses stale ones.
struct Artifacts {
  std::shared_ptr<const fl::Environment> env;
  collect::RecordSet records;
  std::optional<neural::ModelBundle> bundle;
};
Artifacts ensure_artifacts(const ExperimentConfig& cfg, const ArtifactPaths& paths,
                           bool need_model, const Log& log = {});

struct MetricsRow {
  std::size_t round = 0;
  double latency_s = 0.0;
  double energy_j = 0.0;
  double cumulative_latency_s = 0.0;
  double cumulative_energy_j = 0.0;
  double accuracy = 0.0;
  double score = 0.0;
  std::size_t selection_size = 0;
};

struct RunResult {
  std::string policy;
  std::size_t seed_index = 0;
  std::vector<MetricsRow> rows;

  double mean_score() const;
  double mean_selection_size() const;
  double final_accuracy() const;
  double max_accuracy() const;
  double total_latency_s() const;
  double total_energy_j() const;
};

// Policies accepted by run_policy.
const std::vector<std::string>& run_policies();

// One FL session of `cfg.sim.rounds` rounds (fewer when the target accuracy
// stops it early). "gcs" needs the trained bundle and the unaugmented
// records it ranks its starting points from.
RunResult run_policy(const std::string& policy, const ExperimentConfig& cfg,
                     std::shared_ptr<const fl::Environment> env,
                     std::size_t seed_index,
                     const neural::ModelBundle* bundle = nullptr,
                     const collect::RecordSet* records = nullptr);

// First round reaching `target`: cumulative latency and energy at that round.
struct CostToAccuracy {
  std::size_t round = 0;
  double latency_s = 0.0;
  double energy_j = 0.0;
};
std::optional<CostToAccuracy> cost_to_accuracy(const RunResult& run, double target);

// Mean over runs of one policy.
struct PolicySummary {
  std::string policy;
  std::size_t runs = 0;
  double mean_score = 0.0;
  double final_accuracy = 0.0;
  double max_accuracy = 0.0;
  double total_latency_s = 0.0;
  double total_energy_j = 0.0;
  double selection_size = 0.0;
  // Mean cost to the shared target; runs that never reach it are charged
  // their full session totals. Empty when no target was given.
  std::optional<double> toa_latency_s;
  std::optional<double> eoa_energy_j;
  std::size_t reached = 0;
};
PolicySummary summarize(const std::vector<RunResult>& runs,
                        std::optional<double> target = std::nullopt);

// Highest accuracy every run reaches: min over all runs of their maximum.
double shared_target(const std::vector<std::vector<RunResult>>& per_policy);

// CSV writers with fixed columns (see docs/formats.md).
std::string metrics_csv(const std::vector<RunResult>& runs);
std::string summary_csv(const std::vector<PolicySummary>& rows, std::optional<double> target);

struct SweepRow {
  std::string param;
  double value = 0.0;
  PolicySummary summary;
};
std::vector<double> default_grid(const std::string& param);
// alpha retrains the model per value; topk reuses it.
std::vector<SweepRow> run_sweep(const std::string& param, const std::vector<double>& grid,
                                const ExperimentConfig& cfg, const ArtifactPaths& paths,
                                const Log& log = {});
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct AblationRow {
  std::string variant;
  PolicySummary summary;
};
const std::vector<std::string>& ablation_variants();
// The config variant trains on: no-collectors keeps the session total but
// draws every session from the random collector; no-augmentation sets
// shuffles to zero.
ExperimentConfig ablation_config(const ExperimentConfig& cfg, const std::string& variant);
// Rows: "gcs" baseline followed by each requested variant, each over
// cfg.eval.seeds runs. Variant artifacts live in <dir>/ablate-<variant>.
std::vector<AblationRow> run_ablation(const std::vector<std::string>& variants,
                                      const ExperimentConfig& cfg,
                                      const ArtifactPaths& paths, const Log& log = {});
std::string ablation_csv(const std::vector<AblationRow>& rows);

// Reads every run_*.csv under `dir` and summarizes per policy.
std::string report_csv(const std::filesystem::path& dir);

// Shortest round-trip decimal text of a double.
std::string format_double(double v);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace gcs::harness

#include "gcs/harness/experiment.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gcs/errors.h"
#include "gcs/fl/devices.h"
#include "gcs/latent/search.h"
#include "gcs/model/scoring.h"
#include "gcs/neural/checkpoint.h"
#include "gcs/neural/train.h"
#include "gcs/rng.h"

namespace gcs::harness {
namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void say(const Log& log, const std::string& msg) {
  if (log) log(msg);
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double mean_of(const std::vector<RunResult>& runs, double (RunResult::*f)() const) {
  double sum = 0.0;
  for (const auto& r : runs) sum += (r.*f)();
  return runs.empty() ? 0.0 : sum / static_cast<double>(runs.size());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::shared_ptr<const fl::Environment> build_environment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto env = std::make_shared<fl::Environment>();
  if (!cfg.explicit_profiles.empty()) {
    env->pool = DevicePool(cfg.explicit_profiles);
  } else {
    fl::PoolSpec spec = cfg.pool;
    spec.num_clients = cfg.sim.num_clients;
    env->pool = fl::generate_pool(spec, child_seed(cfg.seed, "profiles"));
  }
  fl::TrainValidation data;
  if (!cfg.data.csv_path.empty()) {
    data = fl::split_dataset(fl::load_csv(cfg.data.csv_path), cfg.data.validation_fraction,
                             child_seed(cfg.seed, "split"));
  } else {
    data = fl::make_gaussian_mixture(cfg.data.mixture, child_seed(cfg.seed, "data"));
  }
  env->train = std::move(data.train);
  env->validation = std::move(data.validation);
  fl::PartitionConfig part = cfg.partition;
  part.seed = child_seed(cfg.seed, "partition");
  env->shards = fl::partition_dataset(env->train, cfg.sim.num_clients, part);
  env->sim = cfg.sim;
  return env;
}

std::uint64_t eval_seed(const ExperimentConfig& cfg, std::size_t index) {
  return child_seed(cfg.seed, "eval", index);
}

collect::CollectResult run_collection(const ExperimentConfig& cfg,
                                      std::shared_ptr<const fl::Environment> env) {
  return collect::collect_records(std::move(env), cfg.collect.collectors,
                                  cfg.collect.policies, cfg.budget,
                                  child_seed(cfg.seed, "collect"),
                                  cfg.collect.fixed_reference);
}

collect::RecordSet training_corpus(const ExperimentConfig& cfg,
                                   const collect::RecordSet& records) {
  return collect::augment_records(records, cfg.collect.shuffles,
                                  child_seed(cfg.seed, "augment"));
}

neural::ModelBundle train_model(const ExperimentConfig& cfg,
                                const collect::RecordSet& records, const Log& log,
                                std::vector<std::string>* epoch_csv) {
  neural::TrainConfig tc = cfg.train;
  tc.seed = child_seed(cfg.seed, "train");
  const collect::RecordSet corpus = training_corpus(cfg, records);
  say(log, "training on " + std::to_string(corpus.size()) + " sequences");
  auto result = neural::train(corpus, cfg.num_clients(), tc, [&](const neural::EpochStats& s) {
    if (epoch_csv) {
      epoch_csv->push_back(std::to_string(s.epoch) + "," + format_double(s.loss) + "," +
                           format_double(s.sequence_loss) + "," +
                           format_double(s.score_loss));
    }
    say(log, "epoch " + std::to_string(s.epoch) + " loss " + format_double(s.loss));
  });
  if (result.degenerate_normalization) {
    say(log, "warning: every record has the same score; evaluator targets are constant");
  }
  return std::move(result.bundle);
}

collect::RecordSet write_collection(const ExperimentConfig& cfg,
                                    std::shared_ptr<const fl::Environment> env,
                                    const ArtifactPaths& paths, const Log& log) {
  say(log, "collecting records");
  collect::CollectResult result = run_collection(cfg, env);
  std::ostringstream records;
  collect::write_records(records, result.records.records);
  const std::string text = records.str();

  std::string sessions = "collector,session_seed,favor_reward,mean_score,final_accuracy\n";
  for (const auto& s : result.sessions) {
    sessions += s.collector + "," + std::to_string(s.session_seed) + "," +
                format_double(s.favor_reward) + "," + format_double(s.mean_score) + "," +
                format_double(s.final_accuracy) + "\n";
  }

  ordered_json manifest;
  manifest["format"] = "gcs-collect-manifest";
  manifest["corpus_hash"] = corpus_hash(cfg);
  manifest["environment_hash"] = environment_hash(cfg);
  manifest["root_seed"] = cfg.seed;
  manifest["pool_fingerprint"] = result.records.pool_fingerprint;
  manifest["record_count"] = result.records.size();
  manifest["records_digest"] = hex(fnv1a64(text));
  manifest["budget"] = to_json(cfg)["budget"];
  ordered_json seeds = ordered_json::array();
  for (const auto& s : result.sessions) {
    seeds.push_back({{"collector", s.collector}, {"session_seed", s.session_seed}});
  }
  manifest["sessions"] = std::move(seeds);

  if (!paths.dir.empty()) {
    write_text(paths.records(), text);
    write_text(paths.sessions(), sessions);
    write_text(paths.collect_manifest(), manifest.dump(2) + "\n");
    say(log, "wrote " + paths.records().string());
  }
  return std::move(result.records);
}

collect::RecordSet read_collection(const ExperimentConfig& cfg, const ArtifactPaths& paths) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_text(paths.collect_manifest()));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(paths.collect_manifest().string() + ": " + e.what());
  }
  if (manifest.value("corpus_hash", std::string()) != corpus_hash(cfg)) {
    throw StaleArtifactError(paths.collect_manifest().string() +
                             " was produced by a different configuration");
  }
  const std::string text = read_text(paths.records());
  if (manifest.value("records_digest", std::string()) != hex(fnv1a64(text))) {
    throw StaleArtifactError(paths.records().string() + " does not match its manifest");
  }
  std::istringstream in(text);
  collect::RecordSet set;
  set.records = collect::read_records(in);
  set.budget = cfg.budget;
  set.pool_fingerprint = manifest.value("pool_fingerprint", std::string());
  collect::verify_records(set, cfg.num_clients());
  return set;
}

neural::ModelBundle write_model(const ExperimentConfig& cfg,
                                const collect::RecordSet& records,
                                const ArtifactPaths& paths, const Log& log) {
  std::vector<std::string> epochs;
  neural::ModelBundle bundle = train_model(cfg, records, log, &epochs);
  if (!paths.dir.empty()) {
    std::string csv = "epoch,loss,sequence_loss,score_loss\n";
    for (const auto& line : epochs) csv += line + "\n";
    write_text(paths.train_log(), csv);
    fs::create_directories(paths.dir);
    neural::save_checkpoint_file(paths.checkpoint().string(), bundle,
                                 {{"model_hash", model_hash(cfg)},
                                  {"corpus_hash", corpus_hash(cfg)}});
    say(log, "wrote " + paths.checkpoint().string());
  }
  return bundle;
}

neural::ModelBundle read_model(const ExperimentConfig& cfg, const ArtifactPaths& paths) {
  neural::LoadedCheckpoint loaded = neural::load_checkpoint_file(paths.checkpoint().string());
  const auto it = loaded.tags.find("model_hash");
  if (it == loaded.tags.end() || it->second != model_hash(cfg)) {
    throw StaleArtifactError(paths.checkpoint().string() +
                             " was produced by a different configuration");
  }
  if (loaded.bundle.sizes.devices != cfg.num_clients()) {
    throw ShapeError("checkpoint vocabulary does not match the device pool");
  }
  return std::move(loaded.bundle);
}

collect::RecordSet ensure_records(const ExperimentConfig& cfg,
                                  std::shared_ptr<const fl::Environment> env,
                                  const ArtifactPaths& paths, const Log& log) {
  if (!paths.dir.empty() && fs::exists(paths.collect_manifest())) {
    collect::RecordSet set = read_collection(cfg, paths);
    if (set.pool_fingerprint != env->pool.fingerprint()) {
      throw StaleArtifactError(paths.records().string() + " was collected on another pool");
    }
    say(log, "reusing " + paths.records().string());
    return set;
  }
  return write_collection(cfg, std::move(env), paths, log);
}

neural::ModelBundle ensure_model(const ExperimentConfig& cfg,
                                 const collect::RecordSet& records,
                                 const ArtifactPaths& paths, const Log& log) {
  if (!paths.dir.empty() && fs::exists(paths.checkpoint())) {
    say(log, "reusing " + paths.checkpoint().string());
    return read_model(cfg, paths);
  }
  return write_model(cfg, records, paths, log);
}

Artifacts ensure_artifacts(const ExperimentConfig& cfg, const ArtifactPaths& paths,
                           bool need_model, const Log& log) {
  Artifacts a;
  a.env = build_environment(cfg);
  a.records = ensure_records(cfg, a.env, paths, log);
  if (need_model) a.bundle = ensure_model(cfg, a.records, paths, log);
  return a;
}

double RunResult::mean_score() const {
  double sum = 0.0;
  for (const auto& r : rows) sum += r.score;
  return rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
}

double RunResult::mean_selection_size() const {
  double sum = 0.0;
  for (const auto& r : rows) sum += static_cast<double>(r.selection_size);
  return rows.empty() ? 0.0 : sum / static_cast<double>(rows.size());
}

double RunResult::final_accuracy() const { return rows.empty() ? 0.0 : rows.back().accuracy; }

double RunResult::max_accuracy() const {
  double best = 0.0;
  for (const auto& r : rows) best = std::max(best, r.accuracy);
  return best;
}

double RunResult::total_latency_s() const {
  return rows.empty() ? 0.0 : rows.back().cumulative_latency_s;
}

double RunResult::total_energy_j() const {
  return rows.empty() ? 0.0 : rows.back().cumulative_energy_j;
}

const std::vector<std::string>& run_policies() {
  static const std::vector<std::string> names{"random", "oort", "explore", "gcs"};
  return names;
}

RunResult run_policy(const std::string& policy, const ExperimentConfig& cfg,
                     std::shared_ptr<const fl::Environment> env, std::size_t seed_index,
                     const neural::ModelBundle* bundle, const collect::RecordSet* records) {
  const bool gcs = policy == "gcs";
  if (!gcs && std::find(run_policies().begin(), run_policies().end(), policy) ==
                  run_policies().end()) {
    throw ConfigError("unknown policy '" + policy + "'");
  }
  if (gcs && (bundle == nullptr || records == nullptr || records->empty())) {
    throw DataError("gcs policy needs a trained model and its records");
  }
  const std::uint64_t seed = eval_seed(cfg, seed_index);
  fl::FlSession session(env, seed);
  std::unique_ptr<collect::Policy> baseline;
  if (!gcs) {
    baseline = collect::make_policy(collect::parse_policy_kind(policy), cfg.collect.policies,
                                    env->pool.size(), cfg.sim.participants,
                                    child_seed(seed, "policy"));
  }
  std::vector<collect::SelectionRecord> known;
  if (gcs) known = records->records;
  const latent::OptConfig opt = cfg.effective_opt();
  const int epochs = cfg.sim.local_epochs;

  RunResult run{policy, seed_index, {}};
  double cum_latency = 0.0;
  double cum_energy = 0.0;
  for (std::size_t r = 0; r < cfg.sim.rounds; ++r) {
    ClientSelection selection;
    if (gcs) {
      std::vector<collect::SelectionRecord> ranked = known;
      if (cfg.gcs.rescore_by_round) {
        for (auto& rec : ranked) {
          rec.breakdown = comprehensive_score(
              rec.breakdown.perf, round_latency(rec.selection, env->pool, r, epochs),
              round_energy(rec.selection, env->pool, r, epochs), cfg.budget);
          rec.score = rec.breakdown.comprehensive;
        }
      }
      selection = latent::gcs_select(*bundle, ranked, opt).selection;
    } else {
      selection = baseline->select(session);
    }
    const fl::RoundOutcome outcome = session.run_round(selection, cfg.budget);
    if (baseline) baseline->observe(session, outcome);
    if (gcs && cfg.gcs.online_records) {
      if (cfg.gcs.supersede_observed) {
        std::erase_if(known, [&](const collect::SelectionRecord& rec) {
          return rec.selection.same_set(outcome.selection);
        });
      }
      known.push_back({outcome.selection, outcome.score.comprehensive, outcome.score, "gcs",
                       seed, outcome.round});
    }
    cum_latency += outcome.score.total_latency_s;
    cum_energy += outcome.score.total_energy_j;
    run.rows.push_back({outcome.round, outcome.score.total_latency_s,
                        outcome.score.total_energy_j, cum_latency, cum_energy,
                        outcome.accuracy, outcome.score.comprehensive,
                        outcome.selection.size()});
    if (cfg.eval.target_accuracy && outcome.accuracy >= *cfg.eval.target_accuracy) break;
  }
  return run;
}

std::optional<CostToAccuracy> cost_to_accuracy(const RunResult& run, double target) {
  for (const auto& row : run.rows) {
    if (row.accuracy >= target) {
      return CostToAccuracy{row.round, row.cumulative_latency_s, row.cumulative_energy_j};
    }
  }
  return std::nullopt;
}

PolicySummary summarize(const std::vector<RunResult>& runs, std::optional<double> target) {
  PolicySummary s;
  s.policy = runs.empty() ? std::string() : runs.front().policy;
  s.runs = runs.size();
  s.mean_score = mean_of(runs, &RunResult::mean_score);
  s.final_accuracy = mean_of(runs, &RunResult::final_accuracy);
  s.max_accuracy = mean_of(runs, &RunResult::max_accuracy);
  s.total_latency_s = mean_of(runs, &RunResult::total_latency_s);
  s.total_energy_j = mean_of(runs, &RunResult::total_energy_j);
  s.selection_size = mean_of(runs, &RunResult::mean_selection_size);
  if (target && !runs.empty()) {
    double lat = 0.0;
    double energy = 0.0;
    for (const auto& run : runs) {
      if (const auto c = cost_to_accuracy(run, *target)) {
        lat += c->latency_s;
        energy += c->energy_j;
        ++s.reached;
      } else {
        lat += run.total_latency_s();
        energy += run.total_energy_j();
      }
    }
    s.toa_latency_s = lat / static_cast<double>(runs.size());
    s.eoa_energy_j = energy / static_cast<double>(runs.size());
  }
  return s;
}

double shared_target(const std::vector<std::vector<RunResult>>& per_policy) {
  double target = 1.0;
  bool any = false;
  for (const auto& runs : per_policy) {
    for (const auto& run : runs) {
      target = std::min(target, run.max_accuracy());
      any = true;
    }
  }
  return any ? target : 0.0;
}

std::string metrics_csv(const std::vector<RunResult>& runs) {
  std::string out =
      "policy,seed,round,selection_size,accuracy,latency_s,energy_j,"
      "cumulative_latency_s,cumulative_energy_j,score\n";
  for (const auto& run : runs) {
    const std::string prefix = run.policy + "," + std::to_string(run.seed_index) + ",";
    for (const auto& row : run.rows) {
      out += prefix + std::to_string(row.round) + "," + std::to_string(row.selection_size) +
             "," + format_double(row.accuracy) + "," + format_double(row.latency_s) + "," +
             format_double(row.energy_j) + "," + format_double(row.cumulative_latency_s) +
             "," + format_double(row.cumulative_energy_j) + "," + format_double(row.score) +
             "\n";
    }
    const double n = static_cast<double>(std::max<std::size_t>(run.rows.size(), 1));
    out += prefix + "summary," + format_double(run.mean_selection_size()) + "," +
           format_double(run.final_accuracy()) + "," +
           format_double(run.total_latency_s() / n) + "," +
           format_double(run.total_energy_j() / n) + "," +
           format_double(run.total_latency_s()) + "," +
           format_double(run.total_energy_j()) + "," + format_double(run.mean_score()) + "\n";
  }
  return out;
}

std::string summary_csv(const std::vector<PolicySummary>& rows, std::optional<double> target) {
  std::string out =
      "policy,runs,mean_score,final_accuracy,max_accuracy,total_latency_s,"
      "total_energy_j,selection_size,target_accuracy,toa_latency_s,eoa_energy_j,reached\n";
  for (const auto& s : rows) {
    out += s.policy + "," + std::to_string(s.runs) + "," + format_double(s.mean_score) + "," +
           format_double(s.final_accuracy) + "," + format_double(s.max_accuracy) + "," +
           format_double(s.total_latency_s) + "," + format_double(s.total_energy_j) + "," +
           format_double(s.selection_size) + "," + opt_cell(target) + "," +
           opt_cell(s.toa_latency_s) + "," + opt_cell(s.eoa_energy_j) + "," +
           std::to_string(s.reached) + "\n";
  }
  return out;
}

std::vector<double> default_grid(const std::string& param) {
  if (param == "alpha") return {0.1, 0.3, 0.5, 0.7, 0.9};
  if (param == "topk") return {5, 10, 25, 50};
  throw ConfigError("unknown sweep parameter '" + param + "' (expected alpha or topk)");
}

namespace {

PolicySummary evaluate_gcs(const ExperimentConfig& cfg,
                           std::shared_ptr<const fl::Environment> env,
                           const neural::ModelBundle& bundle,
                           const collect::RecordSet& records, const Log& log,
                           const std::string& label) {
  std::vector<RunResult> runs;
  for (std::size_t i = 0; i < cfg.eval.seeds; ++i) {
    runs.push_back(run_policy("gcs", cfg, env, i, &bundle, &records));
    say(log, label + " seed " + std::to_string(i) + " mean score " +
                 format_double(runs.back().mean_score()));
  }
  PolicySummary s = summarize(runs);
  s.policy = label;
  return s;
}

ArtifactPaths sub_paths(const ArtifactPaths& paths, const std::string& name) {
  return ArtifactPaths{paths.dir.empty() ? fs::path() : paths.dir / name};
}

}  // namespace

std::vector<SweepRow> run_sweep(const std::string& param, const std::vector<double>& grid,
                                const ExperimentConfig& cfg, const ArtifactPaths& paths,
                                const Log& log) {
  default_grid(param);
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  auto env = build_environment(cfg);
  const collect::RecordSet records = ensure_records(cfg, env, paths, log);
  std::optional<neural::ModelBundle> shared;
  std::vector<SweepRow> rows;
  for (double v : grid) {
    ExperimentConfig c = cfg;
    const std::string label = param + "=" + format_double(v);
    if (param == "alpha") {
      c.train.alpha = v;
    } else {
      if (!(v >= 1.0) || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw ConfigError("topk grid values must be positive integers");
      }
      c.gcs.opt.top_k = static_cast<std::size_t>(v);
    }
    c.validate();
    neural::ModelBundle bundle = [&] {
      if (param == "alpha") {
        return ensure_model(c, records, sub_paths(paths, "sweep-" + label), log);
      }
      if (!shared) shared = ensure_model(cfg, records, paths, log);
      return *shared;
    }();
    rows.push_back({param, v, evaluate_gcs(c, env, bundle, records, log, label)});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "param,value,runs,mean_score,final_accuracy,total_latency_s,total_energy_j,"
      "selection_size\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += r.param + "," + format_double(r.value) + "," + std::to_string(s.runs) + "," +
           format_double(s.mean_score) + "," + format_double(s.final_accuracy) + "," +
           format_double(s.total_latency_s) + "," + format_double(s.total_energy_j) + "," +
           format_double(s.selection_size) + "\n";
  }
  return out;
}

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> names{"no-collectors", "no-augmentation"};
  return names;
}

ExperimentConfig ablation_config(const ExperimentConfig& cfg, const std::string& variant) {
  ExperimentConfig c = cfg;
  if (variant == "no-collectors") {
    std::size_t total = 0;
    for (const auto& spec : cfg.collect.collectors) total += spec.sessions;
    c.collect.collectors = {{collect::PolicyKind::kRandom, total}};
  } else if (variant == "no-augmentation") {
    c.collect.shuffles = 0;
  } else {
    throw ConfigError("unknown ablation variant '" + variant +
                      "' (expected no-collectors or no-augmentation)");
  }
  return c;
}

std::vector<AblationRow> run_ablation(const std::vector<std::string>& variants,
                                      const ExperimentConfig& cfg,
                                      const ArtifactPaths& paths, const Log& log) {
  std::vector<ExperimentConfig> configs;
  for (const auto& v : variants) configs.push_back(ablation_config(cfg, v));
  const Artifacts base = ensure_artifacts(cfg, paths, true, log);
  std::vector<AblationRow> rows;
  rows.push_back({"gcs", evaluate_gcs(cfg, base.env, *base.bundle, base.records, log, "gcs")});
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const ExperimentConfig& c = configs[i];
    const ArtifactPaths sub = sub_paths(paths, "ablate-" + variants[i]);
    const collect::RecordSet records = ensure_records(c, base.env, sub, log);
    const neural::ModelBundle bundle = ensure_model(c, records, sub, log);
    rows.push_back({variants[i], evaluate_gcs(c, base.env, bundle, records, log, variants[i])});
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out =
      "variant,runs,mean_score,final_accuracy,total_latency_s,total_energy_j,"
      "selection_size\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    out += r.variant + "," + std::to_string(s.runs) + "," + format_double(s.mean_score) + "," +
           format_double(s.final_accuracy) + "," + format_double(s.total_latency_s) + "," +
           format_double(s.total_energy_j) + "," + format_double(s.selection_size) + "\n";
  }
  return out;
}

std::string report_csv(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.rfind("run_", 0) == 0 &&
        entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) throw DataError("no run_*.csv files in " + dir.string());
  std::sort(files.begin(), files.end());

  std::map<std::string, std::map<std::size_t, RunResult>> grouped;
  std::vector<std::string> order;
  for (const auto& file : files) {
    std::istringstream in(read_text(file));
    std::string line;
    std::getline(in, line);
    if (line.rfind("policy,seed,round,", 0) != 0) {
      throw DataError(file.string() + ": not a metrics file");
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split(line, ',');
      if (cells.size() != 10) throw DataError(file.string() + ": malformed row");
      if (cells[2] == "summary") continue;
      try {
        const std::size_t seed = std::stoul(cells[1]);
        if (!grouped.count(cells[0])) order.push_back(cells[0]);
        RunResult& run = grouped[cells[0]][seed];
        run.policy = cells[0];
        run.seed_index = seed;
        run.rows.push_back({std::stoul(cells[2]), std::stod(cells[5]), std::stod(cells[6]),
                            std::stod(cells[7]), std::stod(cells[8]), std::stod(cells[4]),
                            std::stod(cells[9]), std::stoul(cells[3])});
      } catch (const std::logic_error&) {
        throw DataError(file.string() + ": malformed number");
      }
    }
  }
  std::vector<std::vector<RunResult>> per_policy;
  for (const auto& name : order) {
    std::vector<RunResult> runs;
    for (auto& [seed, run] : grouped[name]) runs.push_back(run);
    per_policy.push_back(std::move(runs));
  }
  const double target = shared_target(per_policy);
  std::vector<PolicySummary> rows;
  for (const auto& runs : per_policy) rows.push_back(summarize(runs, target));
  return summary_csv(rows, target);
}

}  // namespace gcs::harness

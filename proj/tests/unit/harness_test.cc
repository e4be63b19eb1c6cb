#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "gcs/errors.h"
#include "gcs/harness/config.h"
#include "gcs/harness/experiment.h"

namespace gcs::harness {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// A few-second configuration: 12 clients, 4 rounds, tiny network.
ExperimentConfig tiny_config() {
  return parse_config(json::parse(R"({
    "seed": 4,
    "sim": {"clients": 12, "participants": 3, "rounds": 4, "local_epochs": 1},
    "data": {"train_samples": 600, "validation_samples": 200, "dimension": 6},
    "collect": {"collectors": [{"policy": "oort", "sessions": 2},
                               {"policy": "random", "sessions": 2}],
                "shuffles": 2},
    "train": {"epochs": 2, "batch_size": 64, "embedding": 8, "hidden": 8,
              "evaluator_hidden": 8},
    "gcs": {"top_k": 3, "max_steps": 3},
    "eval": {"seeds": 2}
  })"));
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gcs_harness_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Config, DefaultsMatchReferenceSetting) {
  const ExperimentConfig cfg = parse_config(json::object());
  EXPECT_EQ(cfg.sim.num_clients, 100u);
  EXPECT_EQ(cfg.sim.participants, 10u);
  EXPECT_EQ(cfg.sim.rounds, 50u);
  ASSERT_EQ(cfg.collect.collectors.size(), 3u);
  for (const auto& c : cfg.collect.collectors) EXPECT_EQ(c.sessions, 100u);
  EXPECT_EQ(cfg.collect.shuffles, 25u);
  EXPECT_EQ(cfg.train.batch_size, 1024u);
  EXPECT_EQ(cfg.train.learning_rate, 0.001);
  EXPECT_EQ(cfg.train.alpha, 0.8);
  EXPECT_EQ(cfg.train.epochs, 200u);
  EXPECT_EQ(cfg.train.patience, 20u);
  EXPECT_EQ(cfg.train.hidden, 64u);
  EXPECT_EQ(cfg.train.evaluator_hidden, 200u);
  EXPECT_EQ(cfg.train.embedding, 32u);
  EXPECT_FALSE(cfg.train.single_precision);
  EXPECT_EQ(cfg.budget.latency_penalty_exp, 2.0);
  EXPECT_EQ(cfg.effective_opt().max_decode_length, 20u);
}

TEST(Config, UnknownKeysAndWrongTypesAreRejected) {
  EXPECT_THROW(parse_config(json::parse(R"({"sed": 1})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"sim": {"client": 5}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"sim": {"clients": "many"}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"train": {"precision": "half"}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"collect": {"collectors": [{"policy": "magic", "sessions": 1}]}})")),
               ConfigError);
}

TEST(Config, InvariantsAreEnforced) {
  EXPECT_THROW(parse_config(json::parse(R"({"sim": {"clients": 5, "participants": 6}})")),
               ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"train": {"alpha": 1.5}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"budget": {"latency_s": 0}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"gcs": {"step_size": 0}})")), ConfigError);
}

TEST(Config, CanonicalJsonRoundTrips) {
  const ExperimentConfig cfg = tiny_config();
  const auto doc = to_json(cfg);
  EXPECT_EQ(to_json(parse_config(json::parse(doc.dump()))).dump(), doc.dump());
  EXPECT_EQ(corpus_hash(parse_config(json::parse(doc.dump()))), corpus_hash(cfg));
}

TEST(Config, StageHashesFollowTheirInputs) {
  const ExperimentConfig a = tiny_config();
  ExperimentConfig b = a;
  b.gcs.opt.top_k = 7;
  EXPECT_EQ(model_hash(a), model_hash(b));
  EXPECT_NE(run_hash(a), run_hash(b));
  b = a;
  b.train.alpha = 0.5;
  EXPECT_EQ(corpus_hash(a), corpus_hash(b));
  EXPECT_NE(model_hash(a), model_hash(b));
  b = a;
  b.collect.shuffles = 3;
  EXPECT_EQ(environment_hash(a), environment_hash(b));
  EXPECT_NE(corpus_hash(a), corpus_hash(b));
  EXPECT_EQ(environment_hash(a).size(), 16u);
}

TEST(Config, ShippedPresetsLoad) {
  for (const char* name : {"desk.json", "paper.json"}) {
    const fs::path path = fs::path(GCS_SOURCE_DIR) / "configs" / name;
    EXPECT_NO_THROW(load_config(path.string())) << name;
  }
}

TEST(Run, MetricsRowsAndCumulativeInvariants) {
  const ExperimentConfig cfg = tiny_config();
  const auto env = build_environment(cfg);
  std::vector<RunResult> runs;
  for (std::size_t i = 0; i < 2; ++i) runs.push_back(run_policy("oort", cfg, env, i));
  for (const auto& r : runs) {
    ASSERT_EQ(r.rows.size(), cfg.sim.rounds);
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
      EXPECT_EQ(r.rows[k].selection_size, cfg.sim.participants);
      EXPECT_LE(r.rows[k].score, r.rows[k].accuracy);
      if (k > 0) {
        EXPECT_GE(r.rows[k].cumulative_latency_s, r.rows[k - 1].cumulative_latency_s);
        EXPECT_GE(r.rows[k].cumulative_energy_j, r.rows[k - 1].cumulative_energy_j);
      }
    }
  }
  std::istringstream csv(metrics_csv(runs));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line,
            "policy,seed,round,selection_size,accuracy,latency_s,energy_j,"
            "cumulative_latency_s,cumulative_energy_j,score");
  std::size_t rows = 0, summaries = 0;
  while (std::getline(csv, line)) {
    ++rows;
    summaries += line.find(",summary,") != std::string::npos;
  }
  EXPECT_EQ(rows, 2 * (cfg.sim.rounds + 1));
  EXPECT_EQ(summaries, 2u);
}

TEST(Run, PairedSeedsAreReproducible) {
  const ExperimentConfig cfg = tiny_config();
  const auto env = build_environment(cfg);
  EXPECT_EQ(metrics_csv({run_policy("random", cfg, env, 1)}),
            metrics_csv({run_policy("random", cfg, env, 1)}));
  EXPECT_NE(eval_seed(cfg, 0), eval_seed(cfg, 1));
  EXPECT_THROW(run_policy("gcs", cfg, env, 0), Error);
  EXPECT_THROW(run_policy("nope", cfg, env, 0), ConfigError);
}

TEST(Run, GcsHonoursOnlineRecordOptions) {
  ExperimentConfig cfg = tiny_config();
  EXPECT_TRUE(cfg.gcs.supersede_observed);
  EXPECT_FALSE(parse_config(json::parse(R"({"gcs": {"supersede_observed": false}})"))
                   .gcs.supersede_observed);
  EXPECT_THROW(parse_config(json::parse(R"({"gcs": {"supersede_observed": 1}})")), ConfigError);
  const auto env = build_environment(cfg);
  const auto records = run_collection(cfg, env).records;
  const auto bundle = train_model(cfg, records);
  const std::size_t cap = cfg.effective_opt().max_decode_length;
  for (const bool supersede : {true, false}) {
    for (const bool online : {true, false}) {
      cfg.gcs.supersede_observed = supersede;
      cfg.gcs.online_records = online;
      const RunResult a = run_policy("gcs", cfg, env, 0, &bundle, &records);
      ASSERT_EQ(a.rows.size(), cfg.sim.rounds);
      for (const auto& row : a.rows) {
        EXPECT_GE(row.selection_size, 1u);
        EXPECT_LE(row.selection_size, cap);
      }
      EXPECT_EQ(metrics_csv({a}), metrics_csv({run_policy("gcs", cfg, env, 0, &bundle, &records)}));
    }
  }
}

RunResult hand_run(const std::vector<double>& acc) {
  RunResult r;
  r.policy = "x";
  double cl = 0, ce = 0;
  for (std::size_t k = 0; k < acc.size(); ++k) {
    MetricsRow row;
    row.round = k;
    row.latency_s = 2;
    row.energy_j = 3;
    cl += 2;
    ce += 3;
    row.cumulative_latency_s = cl;
    row.cumulative_energy_j = ce;
    row.accuracy = acc[k];
    row.score = acc[k] / 2;
    row.selection_size = 4;
    r.rows.push_back(row);
  }
  return r;
}

TEST(Summary, CostToAccuracyAndSharedTarget) {
  const RunResult a = hand_run({0.2, 0.5, 0.4, 0.7});
  const RunResult b = hand_run({0.1, 0.3, 0.6, 0.6});
  const auto c = cost_to_accuracy(a, 0.5);
  ASSERT_TRUE(c.has_value());
  EXPECT_EQ(c->round, 1u);
  EXPECT_EQ(c->latency_s, 4.0);
  EXPECT_EQ(c->energy_j, 6.0);
  EXPECT_FALSE(cost_to_accuracy(b, 0.65).has_value());
  EXPECT_EQ(shared_target({{a}, {b}}), 0.6);

  const PolicySummary s = summarize({a, b}, 0.65);
  EXPECT_EQ(s.runs, 2u);
  EXPECT_EQ(s.reached, 1u);
  EXPECT_DOUBLE_EQ(*s.toa_latency_s, (8.0 + 8.0) / 2);
  EXPECT_DOUBLE_EQ(*s.eoa_energy_j, (12.0 + 12.0) / 2);
  EXPECT_DOUBLE_EQ(s.final_accuracy, 0.65);
  EXPECT_DOUBLE_EQ(s.mean_score, (1.8 / 8 + 1.6 / 8) / 2);
  EXPECT_DOUBLE_EQ(s.selection_size, 4.0);
}

TEST(Sweep, DefaultGrids) {
  EXPECT_EQ(default_grid("alpha"), (std::vector<double>{0.1, 0.3, 0.5, 0.7, 0.9}));
  EXPECT_EQ(default_grid("topk"), (std::vector<double>{5, 10, 25, 50}));
  EXPECT_THROW(default_grid("beta"), ConfigError);
}

TEST(Ablation, VariantConfigs) {
  const ExperimentConfig cfg = tiny_config();
  const ExperimentConfig nc = ablation_config(cfg, "no-collectors");
  ASSERT_EQ(nc.collect.collectors.size(), 1u);
  EXPECT_EQ(nc.collect.collectors[0].kind, collect::PolicyKind::kRandom);
  EXPECT_EQ(nc.collect.collectors[0].sessions, 4u);
  EXPECT_EQ(nc.collect.shuffles, cfg.collect.shuffles);
  const ExperimentConfig na = ablation_config(cfg, "no-augmentation");
  EXPECT_EQ(na.collect.shuffles, 0u);
  EXPECT_EQ(na.collect.collectors.size(), cfg.collect.collectors.size());
  EXPECT_THROW(ablation_config(cfg, "no-idea"), ConfigError);
}

TEST(Artifacts, ReuseAndStaleDetection) {
  const ExperimentConfig cfg = tiny_config();
  const ArtifactPaths paths{scratch_dir("stale")};
  const Artifacts first = ensure_artifacts(cfg, paths, true);
  ASSERT_TRUE(first.bundle.has_value());
  const std::string records = read_text(paths.records());
  const std::string model = read_text(paths.checkpoint());

  // Same config: artifacts are reused unchanged.
  const Artifacts again = ensure_artifacts(cfg, paths, true);
  EXPECT_EQ(again.records.size(), first.records.size());
  EXPECT_EQ(read_text(paths.checkpoint()), model);

  ExperimentConfig other = cfg;
  other.collect.shuffles = 5;
  EXPECT_THROW(read_collection(other, paths), StaleArtifactError);
  other = cfg;
  other.train.alpha = 0.3;
  EXPECT_THROW(read_model(other, paths), StaleArtifactError);

  write_text(paths.records(), records + "\n");
  EXPECT_THROW(read_collection(cfg, paths), StaleArtifactError);
  fs::remove_all(paths.dir);
}

TEST(Artifacts, CollectionIsByteReproducible) {
  const ExperimentConfig cfg = tiny_config();
  const ArtifactPaths a{scratch_dir("repro_a")}, b{scratch_dir("repro_b")};
  write_collection(cfg, build_environment(cfg), a);
  write_collection(cfg, build_environment(cfg), b);
  for (const auto& file : {a.records().filename(), a.collect_manifest().filename(),
                           a.sessions().filename()}) {
    EXPECT_EQ(read_text(a.dir / file), read_text(b.dir / file)) << file;
  }
  const auto recs = read_collection(cfg, a);
  std::size_t expected = 0;
  for (const auto& c : cfg.collect.collectors) expected += c.sessions * cfg.sim.rounds;
  EXPECT_EQ(recs.size(), expected);
  fs::remove_all(a.dir);
  fs::remove_all(b.dir);
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.25), "0.25");
}

}  // namespace
}  // namespace gcs::harness

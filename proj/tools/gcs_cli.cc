#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <nlohmann/json.hpp>

#include "gcs/errors.h"
#include "gcs/harness/config.h"
#include "gcs/harness/experiment.h"
#include "gcs/latent/search.h"

namespace fs = std::filesystem;
using namespace gcs;
using namespace gcs::harness;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out = "out";
  bool quiet = false;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? parse_config(nlohmann::json::object())
                                               : load_config(c.config_path);
  if (c.seed_set) cfg.seed = c.seed;
  return cfg;
}

Log logger(const Common& c) {
  if (c.quiet) return {};
  return [](const std::string& msg) { std::cerr << msg << "\n"; };
}

// Echoes the effective configuration next to the outputs it produced.
void echo_config(const ExperimentConfig& cfg, const ArtifactPaths& paths) {
  write_text(paths.dir / "config.json", to_json(cfg).dump(2) + "\n");
}

std::vector<std::string> expand(const std::string& value, const std::vector<std::string>& all) {
  if (value == "all") return all;
  return {value};
}

int cmd_collect(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const ArtifactPaths paths{c.out};
  echo_config(cfg, paths);
  const collect::RecordSet records =
      write_collection(cfg, build_environment(cfg), paths, logger(c));
  std::cout << records.size() << " records -> " << paths.records().string() << "\n";
  return 0;
}

int cmd_train(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const ArtifactPaths paths{c.out};
  echo_config(cfg, paths);
  const auto env = build_environment(cfg);
  const collect::RecordSet records = ensure_records(cfg, env, paths, logger(c));
  write_model(cfg, records, paths, logger(c));
  std::cout << "checkpoint -> " << paths.checkpoint().string() << "\n";
  return 0;
}

int cmd_select(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const ArtifactPaths paths{c.out};
  echo_config(cfg, paths);
  const Artifacts a = ensure_artifacts(cfg, paths, true, logger(c));
  const latent::GcsResult result =
      latent::gcs_select(*a.bundle, a.records.records, cfg.effective_opt());
  nlohmann::ordered_json j;
  j["selection"] = result.selection.tokens();
  j["best"] = result.best;
  j["start_estimate"] = result.start_estimate;
  nlohmann::ordered_json candidates = nlohmann::ordered_json::array();
  for (const auto& cand : result.candidates) {
    candidates.push_back({{"start_index", cand.start_index},
                          {"estimate", cand.estimate},
                          {"steps", cand.steps_taken}});
  }
  j["candidates"] = std::move(candidates);
  write_text(paths.dir / "select.json", j.dump(2) + "\n");
  for (std::size_t i = 0; i < result.selection.size(); ++i) {
    std::cout << (i ? " " : "") << result.selection.tokens()[i];
  }
  std::cout << "\n";
  return 0;
}

int cmd_run(const Common& c, const std::string& policy_arg) {
  const ExperimentConfig cfg = load(c);
  const ArtifactPaths paths{c.out};
  echo_config(cfg, paths);
  const auto policies = expand(policy_arg, run_policies());
  const bool need_gcs = std::find(policies.begin(), policies.end(), "gcs") != policies.end();
  Artifacts a;
  if (need_gcs) {
    a = ensure_artifacts(cfg, paths, true, logger(c));
  } else {
    a.env = build_environment(cfg);
  }
  for (const auto& policy : policies) {
    std::vector<RunResult> runs;
    for (std::size_t i = 0; i < cfg.eval.seeds; ++i) {
      runs.push_back(run_policy(policy, cfg, a.env, i, a.bundle ? &*a.bundle : nullptr,
                                &a.records));
      if (!c.quiet) {
        std::cerr << policy << " seed " << i << " mean score "
                  << format_double(runs.back().mean_score()) << "\n";
      }
    }
    const fs::path file = paths.dir / ("run_" + policy + ".csv");
    write_text(file, metrics_csv(runs));
    std::cout << policy << " -> " << file.string() << "\n";
  }
  return 0;
}

int cmd_sweep(const Common& c, const std::string& param, const std::vector<double>& grid) {
  const ExperimentConfig cfg = load(c);
  const ArtifactPaths paths{c.out};
  echo_config(cfg, paths);
  const auto values = grid.empty() ? default_grid(param) : grid;
  const auto rows = run_sweep(param, values, cfg, paths, logger(c));
  const fs::path file = paths.dir / ("sweep_" + param + ".csv");
  write_text(file, sweep_csv(rows));
  std::cout << "sweep -> " << file.string() << "\n";
  return 0;
}

int cmd_ablate(const Common& c, const std::string& variant) {
  const ExperimentConfig cfg = load(c);
  const ArtifactPaths paths{c.out};
  echo_config(cfg, paths);
  const auto rows = run_ablation(expand(variant, ablation_variants()), cfg, paths, logger(c));
  const fs::path file = paths.dir / "ablate.csv";
  write_text(file, ablation_csv(rows));
  std::cout << "ablation -> " << file.string() << "\n";
  return 0;
}

int cmd_report(const Common& c) {
  const fs::path file = fs::path(c.out) / "summary.csv";
  const std::string csv = report_csv(c.out);
  write_text(file, csv);
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Training allocates large short-lived matrices; keep them on the heap
  // instead of paying an mmap/munmap round trip per batch.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  CLI::App app{"Generative client selection for federated learning"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON experiment config")
        ->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& s) {
          common.seed = s;
          common.seed_set = true;
        },
        "Root seed (overrides the config)");
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    sub->add_flag("--quiet,-q", common.quiet, "Suppress progress on stderr");
  };

  auto* collect = app.add_subcommand("collect", "Run the collectors and write records");
  auto* train = app.add_subcommand("train", "Train the encoder-evaluator-decoder");
  auto* select = app.add_subcommand("select", "Dump one gcs_select result");
  auto* run = app.add_subcommand("run", "Run a selection policy and write metrics");
  auto* sweep = app.add_subcommand("sweep", "Sweep alpha or top-K for the GCS policy");
  auto* ablate = app.add_subcommand("ablate", "Compare GCS with its ablations");
  auto* report = app.add_subcommand("report", "Summarize run_*.csv files in --out");
  for (auto* sub : {collect, train, select, run, sweep, ablate, report}) add_common(sub);

  std::string policy = "all";
  run->add_option("--policy", policy, "random, oort, explore, gcs or all")
      ->check(CLI::IsMember({"random", "oort", "explore", "gcs", "all"}))
      ->capture_default_str();
  std::string param = "alpha";
  std::vector<double> grid;
  sweep->add_option("--param", param, "alpha or topk")
      ->check(CLI::IsMember({"alpha", "topk"}))
      ->capture_default_str();
  sweep->add_option("--grid", grid, "Grid values (default depends on --param)")
      ->delimiter(',');
  std::string variant = "all";
  ablate->add_option("--variant", variant, "no-collectors, no-augmentation or all")
      ->check(CLI::IsMember({"no-collectors", "no-augmentation", "all"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*collect) return cmd_collect(common);
    if (*train) return cmd_train(common);
    if (*select) return cmd_select(common);
    if (*run) return cmd_run(common, policy);
    if (*sweep) return cmd_sweep(common, param, grid);
    if (*ablate) return cmd_ablate(common, variant);
    if (*report) return cmd_report(common);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}

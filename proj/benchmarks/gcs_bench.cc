#include <numeric>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gcs/collectors/records.h"
#include "gcs/fl/simulator.h"
#include "gcs/harness/config.h"
#include "gcs/harness/experiment.h"
#include "gcs/latent/search.h"
#include "gcs/model/scoring.h"
#include "gcs/neural/seq2seq.h"

namespace {

using namespace gcs;

std::vector<DeviceId> random_ids(std::size_t pool, std::size_t n, std::mt19937_64& rng) {
  std::vector<DeviceId> ids(pool);
  std::iota(ids.begin(), ids.end(), 0);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(n);
  return ids;
}

harness::ExperimentConfig desk_config() {
  harness::ExperimentConfig cfg;
  cfg.sim.num_clients = 30;
  cfg.sim.participants = 6;
  cfg.sim.rounds = 20;
  return cfg;
}

void BM_ScoreSelection(benchmark::State& state) {
  const auto env = harness::build_environment(desk_config());
  std::mt19937_64 rng(1);
  const ClientSelection sel(random_ids(30, 6, rng));
  const Budget budget;
  std::size_t round = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_selection(sel, env->pool, round++ % 20, 5, 0.8, budget));
  }
}
BENCHMARK(BM_ScoreSelection);

// One FL round: local training on every participant plus aggregation.
void BM_FlRound(benchmark::State& state) {
  const auto env = harness::build_environment(desk_config());
  std::mt19937_64 rng(2);
  const ClientSelection sel(random_ids(30, static_cast<std::size_t>(state.range(0)), rng));
  for (auto _ : state) {
    fl::FlSession session(env, 7);
    benchmark::DoNotOptimize(session.run_round(sel, Budget{}));
  }
}
BENCHMARK(BM_FlRound)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

neural::ModelBundle desk_bundle() {
  return neural::ModelBundle::initialized({30, 32, 64, 200}, 3);
}

std::vector<std::vector<DeviceId>> random_batch(std::size_t n) {
  std::mt19937_64 rng(4);
  std::vector<std::vector<DeviceId>> toks;
  for (std::size_t i = 0; i < n; ++i) toks.push_back(random_ids(30, 6, rng));
  return toks;
}

void BM_BackwardDouble(benchmark::State& state) {
  neural::ModelBundle b = desk_bundle();
  const auto toks = random_batch(static_cast<std::size_t>(state.range(0)));
  std::vector<neural::ExampleView> batch;
  for (const auto& t : toks) batch.push_back({t, 0.5});
  for (auto _ : state) benchmark::DoNotOptimize(neural::backward(b, batch, 0.8));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BackwardDouble)->Arg(1)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_BackwardFloat(benchmark::State& state) {
  const neural::ModelBundle b = desk_bundle();
  neural::ParamSetF p = neural::ParamSetF::zeros(b.sizes), g = neural::ParamSetF::zeros(b.sizes);
  neural::cast_params(b.params, p);
  const auto toks = random_batch(static_cast<std::size_t>(state.range(0)));
  std::vector<neural::ExampleView> batch;
  for (const auto& t : toks) batch.push_back({t, 0.5});
  for (auto _ : state) benchmark::DoNotOptimize(neural::backward_f32(p, g, b.vocab(), batch, 0.8));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BackwardFloat)->Arg(1)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_BeamDecode(benchmark::State& state) {
  const neural::ModelBundle b = desk_bundle();
  std::mt19937_64 rng(5);
  const auto lat = neural::encode(b, random_ids(30, 6, rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        latent::beam_decode(lat, b, static_cast<std::size_t>(state.range(0)), 12));
  }
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(5)->Arg(25)->Unit(benchmark::kMicrosecond);

void BM_Ascent(benchmark::State& state) {
  const neural::ModelBundle b = desk_bundle();
  std::mt19937_64 rng(6);
  const auto lat = neural::encode(b, random_ids(30, 6, rng));
  const latent::EvaluatorObjective obj(b);
  const latent::OptConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(latent::ascend(lat, obj, cfg));
}
BENCHMARK(BM_Ascent)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();

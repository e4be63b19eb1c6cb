#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "gcs/errors.h"
#include "gcs/latent/search.h"
#include "gcs/neural/seq2seq.h"
#include "oracles.h"

namespace gcs::latent {
namespace {

using Eigen::MatrixXd;

ModelBundle random_bundle(const neural::ModelSizes& sizes, std::uint64_t seed, double scale) {
  ModelBundle b = ModelBundle::initialized(sizes, seed);
  std::mt19937_64 rng(seed + 100);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto [name, m] : b.params.entries()) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = u(rng);
  }
  return b;
}

// omega(E) = -||E - c||^2.
class Quadratic final : public LatentObjective {
 public:
  explicit Quadratic(MatrixXd c) : c_(std::move(c)) {}
  double value(const LatentRep& l) const override { return -(l.rows - c_).squaredNorm(); }
  MatrixXd gradient(const LatentRep& l) const override { return -2.0 * (l.rows - c_); }

 private:
  MatrixXd c_;
};

TEST(OptConfig, RejectsBadValues) {
  OptConfig cfg;
  cfg.step_size = 0;
  EXPECT_THROW(cfg.validate(10), ConfigError);
  cfg = OptConfig{};
  cfg.top_k = 0;
  EXPECT_THROW(cfg.validate(10), ConfigError);
  cfg = OptConfig{};
  cfg.max_decode_length = 11;
  EXPECT_THROW(cfg.validate(10), ConfigError);
  cfg = OptConfig{};
  cfg.shrink = 1.0;
  EXPECT_THROW(cfg.validate(10), ConfigError);
  cfg = OptConfig{};
  cfg.max_decode_length = 10;
  EXPECT_NO_THROW(cfg.validate(10));
}

TEST(DefaultDecodeLength, IsTwiceTargetCappedByPool) {
  EXPECT_EQ(default_max_decode_length(6, 30), 12u);
  EXPECT_EQ(default_max_decode_length(10, 15), 15u);
}

TEST(Ascend, ZeroStepsReturnsInput) {
  LatentRep start;
  start.rows = MatrixXd::Random(3, 4);
  OptConfig cfg;
  cfg.max_steps = 0;
  const AscentResult r = ascend(start, Quadratic(MatrixXd::Zero(3, 4)), cfg);
  EXPECT_EQ(r.latent.rows, start.rows);
  EXPECT_EQ(r.accepted_steps, 0u);
  EXPECT_EQ(r.trajectory.size(), 1u);
}

TEST(Ascend, QuadraticStepMatchesClosedForm) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    MatrixXd e0(4, 5), c(4, 5);
    for (Eigen::Index i = 0; i < e0.size(); ++i) {
      e0.data()[i] = n(rng);
      c.data()[i] = n(rng);
    }
    OptConfig cfg;
    cfg.max_steps = 1;
    cfg.step_size = 0.1;
    LatentRep start;
    start.rows = e0;
    const AscentResult r = ascend(start, Quadratic(c), cfg);
    ASSERT_EQ(r.accepted_steps, 1u);
    const MatrixXd want = e0 + 0.1 * (-2.0 * (e0 - c));
    EXPECT_LT((r.latent.rows - want).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Ascend, OvershootingStepShrinksUntilAccepted) {
  LatentRep start;
  start.rows = MatrixXd::Constant(1, 1, 1.0);
  OptConfig cfg;
  cfg.max_steps = 1;
  cfg.step_size = 2.0;  // 1 + 2 * (-2) = -3 is worse; 0.5 lands on c
  cfg.shrink = 0.5;
  const AscentResult r = ascend(start, Quadratic(MatrixXd::Zero(1, 1)), cfg);
  EXPECT_EQ(r.accepted_steps, 1u);
  EXPECT_EQ(r.latent.rows(0, 0), 0.0);
}

TEST(Ascend, EvaluatorTrajectoriesAreNonDecreasing) {
  const ModelBundle b = random_bundle({10, 6, 8, 12}, 5, 0.8);
  const EvaluatorObjective obj(b);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0, 1);
  OptConfig cfg;
  cfg.max_steps = 15;
  cfg.step_size = 0.5;
  for (int trial = 0; trial < 1000; ++trial) {
    LatentRep start;
    start.rows.resize(1 + static_cast<Eigen::Index>(rng() % 5), 8);
    for (Eigen::Index i = 0; i < start.rows.size(); ++i) start.rows.data()[i] = n(rng);
    const AscentResult r = ascend(start, obj, cfg);
    ASSERT_EQ(r.trajectory.size(), r.accepted_steps + 1);
    for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
      EXPECT_GE(r.trajectory[k], r.trajectory[k - 1]);
    }
    EXPECT_EQ(r.estimate, r.trajectory.back());
  }
}

TEST(Ascend, NonFiniteGradientIsNumericError) {
  class Bad final : public LatentObjective {
   public:
    double value(const LatentRep&) const override { return 0.0; }
    MatrixXd gradient(const LatentRep& l) const override {
      return MatrixXd::Constant(l.rows.rows(), l.rows.cols(), NAN);
    }
  };
  LatentRep start;
  start.rows = MatrixXd::Zero(2, 2);
  EXPECT_THROW(ascend(start, Bad{}, OptConfig{}), NumericError);
}

TEST(SelectBest, MatchesLinearScanAndIsRescaleInvariant) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 200; ++trial) {
    CandidateSet set(1 + rng() % 12);
    for (auto& c : set) c.estimate = std::round(4 * n(rng)) / 4;
    std::size_t want = 0;
    for (std::size_t i = 1; i < set.size(); ++i) {
      if (set[i].estimate > set[want].estimate) want = i;
    }
    EXPECT_EQ(select_best(set), want);
    for (auto& c : set) c.estimate = std::exp(3 * c.estimate) + 7;
    EXPECT_EQ(select_best(set), want);
  }
  EXPECT_THROW(select_best(CandidateSet{}), DataError);
  EXPECT_EQ(select_best(CandidateSet(1)), 0u);
}

std::vector<collect::SelectionRecord> scored_records(std::mt19937_64& rng, std::size_t n,
                                                     std::size_t pool) {
  std::vector<collect::SelectionRecord> recs(n);
  for (auto& r : recs) {
    std::vector<DeviceId> ids(pool);
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(1 + rng() % 4);
    r.selection = ClientSelection(ids);
    r.score = static_cast<double>(rng() % 10) / 10;  // many ties
  }
  return recs;
}

TEST(TopK, MatchesStableSortOracle) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto recs = scored_records(rng, 40, 10);
    std::vector<std::size_t> order(recs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return recs[a].score > recs[b].score; });
    for (std::size_t k : {1u, 5u, 25u, 40u, 60u}) {
      const auto got = top_k_indices(recs, k);
      ASSERT_EQ(got.size(), std::min<std::size_t>(k, recs.size()));
      EXPECT_TRUE(std::equal(got.begin(), got.end(), order.begin()));
    }
  }
}

TEST(TopK, StartsAreEncodings) {
  std::mt19937_64 rng(11);
  const ModelBundle b = random_bundle({10, 4, 8, 6}, 1, 0.5);
  const auto recs = scored_records(rng, 8, 10);
  const auto starts = top_k_starts(recs, 100, b);
  ASSERT_EQ(starts.size(), recs.size());
  const auto idx = top_k_indices(recs, 1);
  EXPECT_EQ(top_k_starts(recs, 1, b).front().rows, neural::encode(b, recs[idx[0]].selection.span()).rows);
}

TEST(BeamDecode, FullWidthMatchesExhaustiveOracle) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 1);
  const std::size_t width = gcs::testing::sequence_space(6, 4) * 7;
  for (int trial = 0; trial < 20; ++trial) {
    const ModelBundle b = random_bundle({6, 4, 8, 5}, 200 + trial, 1.5);
    LatentRep lat;
    lat.rows.resize(3, 8);
    for (Eigen::Index i = 0; i < lat.rows.size(); ++i) lat.rows.data()[i] = n(rng);
    const auto want = gcs::testing::exhaustive_decode(b, lat, 4);
    EXPECT_EQ(beam_decode(lat, b, width, 4).tokens(), want.tokens) << "trial " << trial;
  }
}

TEST(BeamDecode, WidthOneIsGreedyChain) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const ModelBundle b = random_bundle({8, 4, 8, 5}, 300 + trial, 1.5);
    const LatentRep lat = neural::encode(b, std::vector<DeviceId>{1, 5, 2});
    std::vector<DeviceId> chain;
    neural::DecoderState st = neural::initial_decoder_state(lat);
    int prev = b.vocab().eos();
    while (true) {
      const auto step = neural::decode_step(b, prev, st, lat);
      Eigen::VectorXd lp = step.log_probs;
      lp[b.vocab().pad()] = -INFINITY;
      for (DeviceId t : chain) lp[t] = -INFINITY;
      if (chain.empty()) lp[b.vocab().eos()] = -INFINITY;
      if (chain.size() == 5) lp.head(8).setConstant(-INFINITY);
      Eigen::Index arg;
      lp.maxCoeff(&arg);
      if (arg == b.vocab().eos()) break;
      chain.push_back(static_cast<DeviceId>(arg));
      st = step.next;
      prev = static_cast<int>(arg);
    }
    EXPECT_EQ(beam_decode(lat, b, 1, 5).tokens(), chain);
  }
}

TEST(BeamDecode, NeverEmitsDuplicatesOrSpecialTokens) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const ModelBundle b = random_bundle({7, 3, 4, 3}, 1000 + trial, 3.0);
    LatentRep lat;
    lat.rows.resize(2, 4);
    for (Eigen::Index i = 0; i < lat.rows.size(); ++i) lat.rows.data()[i] = n(rng);
    const ClientSelection s = beam_decode(lat, b, 3, 7);
    EXPECT_NO_THROW(s.validate(7));
    EXPECT_FALSE(s.empty());
  }
}

TEST(GcsSelect, DegenerateConfigYieldsValidDeterministicSelection) {
  std::mt19937_64 rng(15);
  const ModelBundle b = random_bundle({10, 4, 8, 6}, 2, 0.7);
  const auto recs = scored_records(rng, 30, 10);
  OptConfig cfg;
  cfg.top_k = 1;
  cfg.max_steps = 0;
  cfg.beam_width = 1;
  cfg.max_decode_length = 10;
  const GcsResult r = gcs_select(b, recs, cfg);
  EXPECT_NO_THROW(r.selection.validate(10));
  EXPECT_EQ(r.candidates.size(), 1u);
  cfg = OptConfig{};
  cfg.max_decode_length = 10;
  const GcsResult x = gcs_select(b, recs, cfg), y = gcs_select(b, recs, cfg);
  EXPECT_EQ(x.selection, y.selection);
  EXPECT_EQ(x.best, y.best);
  EXPECT_GE(x.candidates[x.best].estimate, x.start_estimate);
}

}  // namespace
}  // namespace gcs::latent

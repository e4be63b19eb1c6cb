#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "gcs/collectors/records.h"
#include "gcs/errors.h"
#include "gcs/neural/bundle.h"
#include "gcs/neural/checkpoint.h"
#include "gcs/neural/seq2seq.h"
#include "gcs/neural/train.h"

namespace gcs::neural {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Random parameters with non-zero biases so every path carries gradient.
ModelBundle random_bundle(const ModelSizes& sizes, std::uint64_t seed, double scale = 0.5) {
  ModelBundle b = ModelBundle::initialized(sizes, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto [name, m] : b.params.entries()) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = u(rng);
  }
  return b;
}

ModelSizes tiny_sizes() { return {5, 4, 8, 6}; }

TEST(Vocabulary, LayoutAndSpecialTokens) {
  const Vocabulary v{30};
  EXPECT_EQ(v.size(), 32u);
  EXPECT_EQ(v.eos(), 30);
  EXPECT_EQ(v.pad(), 31);
}

TEST(Encode, ShapeAndDeterminism) {
  const ModelBundle b = ModelBundle::initialized({30, 32, 64, 200}, 3);
  const std::vector<DeviceId> toks{4, 9, 17};
  const LatentRep a = encode(b, toks);
  EXPECT_EQ(a.rows.rows(), 3);
  EXPECT_EQ(a.rows.cols(), 64);
  EXPECT_EQ(encode(b, toks).rows, a.rows);
  EXPECT_THROW(encode(b, std::vector<DeviceId>{}), InvalidSelectionError);
  EXPECT_THROW(encode(b, std::vector<DeviceId>{30}), UnknownDeviceError);
}

TEST(Encode, MatchesScalarHandTrace) {
  const ModelBundle b = random_bundle({3, 2, 2, 2}, 7);
  const auto& p = b.params;
  const std::vector<DeviceId> toks{2, 0};
  double h[2] = {0, 0}, c[2] = {0, 0};
  double want[2][2];
  for (std::size_t t = 0; t < toks.size(); ++t) {
    double pre[8];
    for (int r = 0; r < 8; ++r) {
      pre[r] = p.encoder.bias(r, 0);
      for (int k = 0; k < 2; ++k) pre[r] += p.encoder.input_weight(r, k) * p.embedding(k, toks[t]);
      for (int k = 0; k < 2; ++k) pre[r] += p.encoder.recurrent_weight(r, k) * h[k];
    }
    for (int u = 0; u < 2; ++u) {
      const double ig = sigm(pre[u]), fg = sigm(pre[2 + u]), gg = std::tanh(pre[4 + u]),
                   og = sigm(pre[6 + u]);
      c[u] = fg * c[u] + ig * gg;
      h[u] = og * std::tanh(c[u]);
      want[t][u] = h[u];
    }
  }
  const LatentRep lat = encode(b, toks);
  for (int t = 0; t < 2; ++t) {
    for (int u = 0; u < 2; ++u) EXPECT_NEAR(lat.rows(t, u), want[t][u], 1e-14);
  }
}

TEST(Attention, HandExample) {
  MatrixXd latent(2, 2);
  latent << 1, 0, 0, 1;
  const Attention a = attend(VectorXd::Unit(2, 0), latent);
  const double e = std::exp(1.0);
  EXPECT_NEAR(a.weights[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(a.weights[1], 1 / (e + 1), 1e-15);
  EXPECT_NEAR(a.context[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(a.context[1], 1 / (e + 1), 1e-15);
}

TEST(Attention, SingletonAndSimplex) {
  MatrixXd one(1, 3);
  one << 0.2, -0.4, 1.0;
  const Attention s = attend(VectorXd::Ones(3), one);
  EXPECT_DOUBLE_EQ(s.weights[0], 1.0);
  EXPECT_EQ(s.context, one.row(0).transpose());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    MatrixXd lat(5, 4);
    for (Eigen::Index i = 0; i < lat.size(); ++i) lat.data()[i] = n(rng);
    VectorXd q(4);
    for (Eigen::Index i = 0; i < 4; ++i) q[i] = n(rng);
    const Attention a = attend(q, lat);
    EXPECT_NEAR(a.weights.sum(), 1.0, 1e-12);
    EXPECT_GT(a.weights.minCoeff(), 0.0);
  }
}

TEST(DecodeStep, DistributionSumsToOne) {
  const ModelBundle b = random_bundle(tiny_sizes(), 2, 2.0);
  const LatentRep lat = encode(b, std::vector<DeviceId>{1, 3});
  const DecodeStep s = decode_step(b, b.vocab().eos(), initial_decoder_state(lat), lat);
  EXPECT_EQ(s.log_probs.size(), 7);
  EXPECT_NEAR(s.probs().sum(), 1.0, 1e-12);
}

TEST(DecodeStep, ZeroOutputWeightIsUniform) {
  ModelBundle b = random_bundle(tiny_sizes(), 2);
  b.params.output_weight.setZero();
  const LatentRep lat = encode(b, std::vector<DeviceId>{1, 3});
  const DecodeStep s = decode_step(b, 0, initial_decoder_state(lat), lat);
  for (Eigen::Index i = 0; i < s.log_probs.size(); ++i) {
    EXPECT_NEAR(s.log_probs[i], -std::log(7.0), 1e-14);
  }
}

TEST(DecodeStep, ThreeTokenVocabularyMatchesHandSoftmax) {
  const ModelBundle b = random_bundle({1, 2, 2, 2}, 5, 1.0);
  const auto& p = b.params;
  const LatentRep lat = encode(b, std::vector<DeviceId>{0});
  const DecoderState st = initial_decoder_state(lat);
  EXPECT_EQ(st.h, lat.rows.row(0).transpose());
  EXPECT_TRUE(st.c.isZero());
  const DecodeStep s = decode_step(b, 1, st, lat);

  // Hand: decoder cell on EOS, attention over a single row, then softmax.
  double h[2], c[2];
  for (int u = 0; u < 2; ++u) {
    double pre[4];
    for (int gate = 0; gate < 4; ++gate) {
      const int r = gate * 2 + u;
      pre[gate] = p.decoder.bias(r, 0);
      for (int k = 0; k < 2; ++k) pre[gate] += p.decoder.input_weight(r, k) * p.embedding(k, 1);
      for (int k = 0; k < 2; ++k) pre[gate] += p.decoder.recurrent_weight(r, k) * st.h[k];
    }
    c[u] = sigm(pre[1]) * 0.0 + sigm(pre[0]) * std::tanh(pre[2]);
    h[u] = sigm(pre[3]) * std::tanh(c[u]);
  }
  double logits[3], z = 0;
  for (int v = 0; v < 3; ++v) {
    logits[v] = 0;
    for (int k = 0; k < 2; ++k) logits[v] += p.output_weight(v, k) * h[k];
    for (int k = 0; k < 2; ++k) logits[v] += p.output_weight(v, 2 + k) * lat.rows(0, k);
    z += std::exp(logits[v]);
  }
  for (int v = 0; v < 3; ++v) EXPECT_NEAR(s.probs()[v], std::exp(logits[v]) / z, 1e-14);
  EXPECT_NEAR(s.next.h[0], h[0], 1e-14);
  EXPECT_NEAR(s.next.c[1], c[1], 1e-14);
}

TEST(SequenceNll, UniformModelGivesLengthTimesLogV) {
  ModelBundle b = random_bundle({30, 8, 16, 10}, 4);
  b.params.output_weight.setZero();
  const std::vector<DeviceId> toks{3, 7, 11, 2, 29, 0};
  const LatentRep lat = encode(b, toks);
  EXPECT_NEAR(sequence_nll(b, toks, lat), 7 * std::log(32.0), 1e-11);
}

TEST(SequenceNll, NonNegativeAndMatchesStepSum) {
  const ModelBundle b = random_bundle(tiny_sizes(), 9, 1.5);
  const std::vector<DeviceId> toks{4, 0, 2};
  const LatentRep lat = encode(b, toks);
  const auto steps = sequence_step_log_probs(b, toks, lat);
  ASSERT_EQ(steps.size(), 4u);
  double sum = 0;
  for (double lp : steps) sum -= lp;
  EXPECT_NEAR(sequence_nll(b, toks, lat), sum, 1e-12);
  EXPECT_GE(sum, 0.0);
}

TEST(Evaluator, IdenticalRowsPoolToThatRow) {
  const ModelBundle b = random_bundle(tiny_sizes(), 6);
  LatentRep one, many;
  one.rows = MatrixXd::Random(1, 8);
  many.rows = one.rows.replicate(4, 1);
  EXPECT_NEAR(evaluate_score(b, one), evaluate_score(b, many), 1e-14);
  EXPECT_TRUE(std::isfinite(evaluate_score(b, many)));
}

TEST(Evaluator, MatchesHandTwoLayerNet) {
  ModelBundle b = ModelBundle::initialized({2, 2, 2, 2}, 1);
  auto& p = b.params;
  p.eval_w1 << 1.0, -2.0, 0.5, 0.5;
  p.eval_b1 << 0.1, -0.2;
  p.eval_w2 << 2.0, -1.0;
  p.eval_b2 << 0.3;
  LatentRep lat;
  lat.rows.resize(2, 2);
  lat.rows << 1.0, 0.0, 0.0, -1.0;
  // pooled (0.5, -0.5); pre (1.6, -0.2); relu (1.6, 0); out 3.2 + 0.3.
  EXPECT_NEAR(evaluate_score(b, lat), 3.5, 1e-15);
}

TEST(JointLoss, CombinesPartsWithAlpha) {
  const ModelBundle b = random_bundle(tiny_sizes(), 8);
  const std::vector<DeviceId> t1{0, 1}, t2{4, 2, 3}, t3{1};
  const std::vector<ExampleView> batch{{t1, 0.2}, {t2, 0.9}, {t3, 0.5}};
  const LossParts at1 = joint_loss(b, batch, 1.0);
  double nll = 0;
  for (const auto& ex : batch) nll += sequence_nll(b, ex.tokens, encode(b, ex.tokens));
  EXPECT_NEAR(at1.total, nll / 3, 1e-12);
  const LossParts l = joint_loss(b, batch, 0.8);
  EXPECT_NEAR(l.total, 0.8 * l.sequence + 0.2 * l.score, 1e-15);
  double sq = 0;
  for (const auto& ex : batch) {
    const double e = evaluate_score(b, encode(b, ex.tokens)) - ex.target;
    sq += e * e;
  }
  EXPECT_NEAR(l.score, sq / 3, 1e-12);
  EXPECT_DOUBLE_EQ(0.8 * 1.0 + 0.2 * 0.5, 0.9);
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-7});
}

TEST(Backward, MatchesCentralDifferencesPerParameterGroup) {
  ModelBundle b = random_bundle(tiny_sizes(), 21);
  const std::vector<DeviceId> t1{0, 3}, t2{4, 2, 1}, t3{2}, t4{1, 0, 4};
  const std::vector<ExampleView> batch{{t1, 0.3}, {t2, 0.8}, {t3, 0.1}, {t4, 0.6}};
  const double alpha = 0.7;
  backward(b, batch, alpha);
  const ParamSet grads = b.grads;
  std::mt19937_64 rng(4);
  const double h = 1e-5;
  int probes = 0;
  for (auto [name, m] : b.params.entries()) {
    const Mat<double>* g = nullptr;
    for (auto [gname, gm] : grads.entries()) {
      if (gname == name) g = gm;
    }
    for (int k = 0; k < 12; ++k) {
      const auto idx = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m->size()));
      const double saved = m->data()[idx];
      m->data()[idx] = saved + h;
      const double up = joint_loss(b, batch, alpha).total;
      m->data()[idx] = saved - h;
      const double down = joint_loss(b, batch, alpha).total;
      m->data()[idx] = saved;
      const double fd = (up - down) / (2 * h);
      EXPECT_LT(relative_error(g->data()[idx], fd), 1e-4) << name << "[" << idx << "]";
      ++probes;
    }
  }
  EXPECT_GE(probes, 100);
}

TEST(Backward, LatentGradientsMatchCentralDifferences) {
  const ModelBundle base = random_bundle(tiny_sizes(), 33);
  const double alpha = 0.6;
  int probes = 0;
  for (const std::vector<DeviceId>& toks :
       {std::vector<DeviceId>{0, 3, 1}, std::vector<DeviceId>{4, 2}}) {
    ModelBundle b = base;
    const std::vector<ExampleView> batch{{toks, 0.4}};
    const BackwardResult r = backward(b, batch, alpha, true);
    ASSERT_EQ(r.latent_grads.size(), 1u);
    LatentRep lat = encode(b, toks);
    for (Eigen::Index i = 0; i < lat.rows.size(); ++i) {
      const double saved = lat.rows.data()[i];
      lat.rows.data()[i] = saved + 1e-5;
      const double up = latent_loss(b, toks, 0.4, lat, alpha);
      lat.rows.data()[i] = saved - 1e-5;
      const double down = latent_loss(b, toks, 0.4, lat, alpha);
      lat.rows.data()[i] = saved;
      EXPECT_LT(relative_error(r.latent_grads[0].data()[i], (up - down) / 2e-5), 1e-4);
      ++probes;
    }
  }
  EXPECT_GE(probes, 40);
}

TEST(Backward, AlphaOneLeavesEvaluatorGradientZero) {
  ModelBundle b = random_bundle(tiny_sizes(), 12);
  const std::vector<DeviceId> t{1, 2};
  const std::vector<ExampleView> batch{{t, 0.9}};
  backward(b, batch, 1.0);
  EXPECT_TRUE(b.grads.eval_w1.isZero());
  EXPECT_TRUE(b.grads.eval_b1.isZero());
  EXPECT_TRUE(b.grads.eval_w2.isZero());
  EXPECT_TRUE(b.grads.eval_b2.isZero());
}

TEST(Backward, FiniteForLargeWeights) {
  ModelBundle b = random_bundle(tiny_sizes(), 13, 40.0);
  const std::vector<DeviceId> t{0, 1, 2, 3, 4};
  const std::vector<ExampleView> batch{{t, 0.5}};
  const BackwardResult r = backward(b, batch, 0.8);
  EXPECT_TRUE(std::isfinite(r.loss.total));
  EXPECT_TRUE(b.grads.all_finite());
}

TEST(Backward, SinglePrecisionAgreesWithDouble) {
  ModelBundle b = random_bundle({12, 8, 16, 10}, 14);
  std::vector<std::vector<DeviceId>> toks{{0, 5, 9}, {11, 2}, {3, 4, 7, 1}};
  std::vector<ExampleView> batch;
  for (const auto& t : toks) batch.push_back({t, 0.5});
  const BackwardResult r = backward(b, batch, 0.8);
  ParamSetF p32 = ParamSetF::zeros(b.sizes), g32 = ParamSetF::zeros(b.sizes);
  cast_params(b.params, p32);
  const LossParts l32 = backward_f32(p32, g32, b.vocab(), batch, 0.8);
  EXPECT_NEAR(l32.total, r.loss.total, 1e-5 * r.loss.total);
  ParamSet back = ParamSet::zeros(b.sizes);
  cast_params(g32, back);
  auto gd = b.grads.entries();
  auto gf = back.entries();
  for (std::size_t k = 0; k < gd.size(); ++k) {
    const double scale = std::max(gd[k].second->norm(), 1e-12);
    EXPECT_LT((*gd[k].second - *gf[k].second).norm() / scale, 1e-4) << gd[k].first;
  }
}

TEST(Checkpoint, RoundTripReproducesForwardOutputs) {
  ModelBundle b = random_bundle({6, 4, 8, 5}, 15);
  b.normalization = {0.125, 0.75};
  std::stringstream buf;
  save_checkpoint(buf, b, {{"model_hash", "abc"}});
  const LoadedCheckpoint loaded = load_checkpoint(buf);
  EXPECT_EQ(loaded.tags.at("model_hash"), "abc");
  EXPECT_EQ(loaded.bundle.normalization.min, 0.125);
  EXPECT_EQ(loaded.bundle.normalization.max, 0.75);
  const std::vector<DeviceId> t{5, 0, 2};
  const LatentRep x = encode(b, t), y = encode(loaded.bundle, t);
  EXPECT_EQ(x.rows, y.rows);
  EXPECT_EQ(evaluate_score(b, x), evaluate_score(loaded.bundle, y));
  EXPECT_EQ(sequence_nll(b, t, x), sequence_nll(loaded.bundle, t, y));
}

TEST(Checkpoint, RejectsWrongVersionAndGarbage) {
  const ModelBundle b = ModelBundle::initialized({3, 2, 2, 2}, 1);
  std::stringstream buf;
  save_checkpoint(buf, b);
  std::string text = buf.str();
  const auto pos = text.find("\"version\":");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 11, "\"version\":9");
  std::istringstream bad(text);
  EXPECT_THROW(load_checkpoint(bad), DataError);
  std::istringstream junk("not json");
  EXPECT_THROW(load_checkpoint(junk), DataError);
}

collect::RecordSet synthetic_corpus(std::size_t n, std::size_t pool, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  collect::RecordSet set;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<DeviceId> ids(pool);
    for (std::size_t k = 0; k < pool; ++k) ids[k] = static_cast<DeviceId>(k);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(3 + rng() % 3);
    collect::SelectionRecord r;
    r.selection = ClientSelection(ids);
    // Score depends on the set: devices with low ids are better.
    double s = 0;
    for (DeviceId id : ids) s += 1.0 - static_cast<double>(id) / static_cast<double>(pool);
    r.score = s / static_cast<double>(ids.size());
    set.records.push_back(r);
  }
  return set;
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto corpus = synthetic_corpus(20, 10, 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 5;
  const TrainResult r = train(corpus, 10, cfg);
  const ModelBundle init = ModelBundle::initialized({10, 32, 64, 200}, 5);
  auto a = r.bundle.params.entries();
  auto b = init.params.entries();
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(*a[k].second, *b[k].second) << a[k].first;
  EXPECT_TRUE(r.history.empty());
}

TEST(Train, LossDecreasesAndRunIsDeterministic) {
  const auto corpus = synthetic_corpus(300, 20, 2);
  TrainConfig cfg;
  cfg.epochs = 15;
  cfg.seed = 3;
  const TrainResult a = train(corpus, 20, cfg);
  ASSERT_FALSE(a.history.empty());
  EXPECT_LE(a.history.back().loss, a.history.front().loss);
  const TrainResult b = train(corpus, 20, cfg);
  auto pa = a.bundle.params.entries();
  auto pb = b.bundle.params.entries();
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_EQ(*pa[k].second, *pb[k].second);
}

TEST(Train, NormalizationSpansCorpusScores) {
  auto corpus = synthetic_corpus(30, 10, 3);
  double lo = 1e9, hi = -1e9;
  for (const auto& r : corpus.records) {
    lo = std::min(lo, r.score);
    hi = std::max(hi, r.score);
  }
  TrainConfig cfg;
  cfg.epochs = 1;
  const TrainResult r = train(corpus, 10, cfg);
  EXPECT_EQ(r.bundle.normalization.min, lo);
  EXPECT_EQ(r.bundle.normalization.max, hi);
  EXPECT_FALSE(r.degenerate_normalization);
  for (auto& rec : corpus.records) rec.score = 0.4;
  EXPECT_TRUE(train(corpus, 10, cfg).degenerate_normalization);
}

TEST(Train, EmptyCorpusIsDataError) {
  EXPECT_THROW(train(collect::RecordSet{}, 10, TrainConfig{}), DataError);
}

}  // namespace
}  // namespace gcs::neural

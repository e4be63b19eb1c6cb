#include "gcs/neural/seq2seq.h"

#include <cmath>
#include <map>
#include <string>
#include <type_traits>

#include "gcs/errors.h"

namespace gcs::neural {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

template <typename S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

// Token ids laid out step-major: tokens[t][b].
using TokenGrid = std::vector<std::vector<int>>;

template <typename S>
Mat<S> sigmoid(const Mat<S>& x) {
  return (S(1) + (-x.array()).exp()).inverse().matrix();
}

// Eigen vectorizes tanh only for float; the double path goes through the
// vectorized exp instead.
template <typename S>
Mat<S> tanh_of(const Mat<S>& x) {
  if constexpr (std::is_same_v<S, float>) {
    return x.array().tanh().matrix();
  } else {
    return (S(1) - S(2) / ((S(2) * x.array()).exp() + S(1))).matrix();
  }
}

template <typename S>
Mat<S> gather_columns(const Mat<S>& table, const std::vector<int>& ids) {
  Mat<S> out(table.rows(), static_cast<Index>(ids.size()));
  for (std::size_t b = 0; b < ids.size(); ++b) {
    out.col(static_cast<Index>(b)) = table.col(ids[b]);
  }
  return out;
}

template <typename S>
void scatter_add_columns(Mat<S>& table, const std::vector<int>& ids, const Mat<S>& values) {
  for (std::size_t b = 0; b < ids.size(); ++b) {
    table.col(ids[b]) += values.col(static_cast<Index>(b));
  }
}

// Column-wise log-softmax with max subtraction.
template <typename S>
Mat<S> log_softmax_columns(const Mat<S>& logits) {
  const RowVec<S> max = logits.colwise().maxCoeff();
  Mat<S> shifted = logits.rowwise() - max;
  const RowVec<S> lse = shifted.array().exp().colwise().sum().log().matrix();
  return shifted.rowwise() - lse;
}

// Input pre-activations W_in x for a batch of tokens. Given the projected
// table W_in * embedding (4H x |V|) this is a column gather, which is how
// the batched training path avoids a per-step input product.
template <typename S>
Mat<S> input_preact(const LstmParamsT<S>& p, const Mat<S>& embedding,
                    const Mat<S>* projected, const std::vector<int>& ids) {
  if (projected) return gather_columns(*projected, ids);
  return p.input_weight * gather_columns(embedding, ids);
}

template <typename S>
struct LstmStep {
  Mat<S> h_prev;  // H x B
  Mat<S> c_prev;
  Mat<S> gates;   // activated i, f, g, o blocks, 4H x B
  Mat<S> c;
  Mat<S> tanh_c;
  Mat<S> h;
};

template <typename S>
void lstm_forward(const LstmParamsT<S>& p, Mat<S> pre, LstmStep<S>& s) {
  const Index h = p.recurrent_weight.cols();
  pre.noalias() += p.recurrent_weight * s.h_prev;
  pre.colwise() += p.bias.col(0);
  s.gates.resize(pre.rows(), pre.cols());
  s.gates.topRows(2 * h) = sigmoid<S>(pre.topRows(2 * h));
  s.gates.middleRows(2 * h, h) = tanh_of<S>(pre.middleRows(2 * h, h));
  s.gates.bottomRows(h) = sigmoid<S>(pre.bottomRows(h));
  const auto i = s.gates.topRows(h).array();
  const auto f = s.gates.middleRows(h, h).array();
  const auto g = s.gates.middleRows(2 * h, h).array();
  s.c = (f * s.c_prev.array() + i * g).matrix();
  s.tanh_c = tanh_of<S>(s.c);
  s.h = (s.gates.bottomRows(h).array() * s.tanh_c.array()).matrix();
}

// Given dL/dh and dL/dc at this step's outputs, accumulates recurrent and
// bias gradients, writes dL/d(pre-activation) to `dpre` and dL/dh_prev to
// `dh_prev`; `dc` becomes dL/dc_prev. Input-side gradients are left to the
// caller, which scatters `dpre` by token.
template <typename S>
void lstm_backward(const LstmParamsT<S>& p, LstmParamsT<S>& g, const LstmStep<S>& s,
                   const Mat<S>& dh, Mat<S>& dc, Mat<S>& dpre, Mat<S>& dh_prev) {
  const Index h = p.recurrent_weight.cols();
  const auto i = s.gates.topRows(h).array();
  const auto f = s.gates.middleRows(h, h).array();
  const auto gg = s.gates.middleRows(2 * h, h).array();
  const auto o = s.gates.bottomRows(h).array();
  const auto tc = s.tanh_c.array();

  dc.array() += dh.array() * o * (S(1) - tc.square());
  dpre.resize(4 * h, dh.cols());
  dpre.topRows(h) = (dc.array() * gg * i * (S(1) - i)).matrix();
  dpre.middleRows(h, h) = (dc.array() * s.c_prev.array() * f * (S(1) - f)).matrix();
  dpre.middleRows(2 * h, h) = (dc.array() * i * (S(1) - gg.square())).matrix();
  dpre.bottomRows(h) = (dh.array() * tc * o * (S(1) - o)).matrix();
  dc = (dc.array() * f).matrix();

  g.recurrent_weight.noalias() += dpre * s.h_prev.transpose();
  g.bias.col(0) += dpre.rowwise().sum();
  dh_prev.noalias() = p.recurrent_weight.transpose() * dpre;
}

// Turns per-token sums of dL/d(pre-activation) into input-weight and
// embedding gradients: pre = W_in * emb[:, token].
template <typename S>
void finish_input_grads(const LstmParamsT<S>& p, LstmParamsT<S>& g, const Mat<S>& embedding,
                        Mat<S>& g_embedding, const Mat<S>& token_grad) {
  g.input_weight.noalias() += token_grad * embedding.transpose();
  g_embedding.noalias() += p.input_weight.transpose() * token_grad;
}

template <typename S>
struct EncoderCache {
  TokenGrid tokens;
  std::vector<LstmStep<S>> steps;
};

template <typename S>
EncoderCache<S> encoder_forward(const ParamSetT<S>& p, TokenGrid tokens,
                                const Mat<S>* projected) {
  const Index h = p.encoder.recurrent_weight.cols();
  const auto batch = static_cast<Index>(tokens.front().size());
  EncoderCache<S> cache;
  cache.steps.resize(tokens.size());
  Mat<S> h_prev = Mat<S>::Zero(h, batch);
  Mat<S> c_prev = Mat<S>::Zero(h, batch);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    LstmStep<S>& s = cache.steps[t];
    s.h_prev = std::move(h_prev);
    s.c_prev = std::move(c_prev);
    lstm_forward(p.encoder, input_preact(p.encoder, p.embedding, projected, tokens[t]), s);
    h_prev = s.h;
    c_prev = s.c;
  }
  cache.tokens = std::move(tokens);
  return cache;
}

template <typename S>
void encoder_backward(const ParamSetT<S>& p, ParamSetT<S>& g, const EncoderCache<S>& cache,
                      const std::vector<Mat<S>>& d_latent, Mat<S>& token_grad) {
  const Index h = p.encoder.recurrent_weight.cols();
  const Index batch = d_latent.front().cols();
  Mat<S> dh_rec = Mat<S>::Zero(h, batch);
  Mat<S> dc = Mat<S>::Zero(h, batch);
  Mat<S> dpre, dh_prev;
  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const Mat<S> dh = d_latent[t] + dh_rec;
    lstm_backward(p.encoder, g.encoder, cache.steps[t], dh, dc, dpre, dh_prev);
    scatter_add_columns(token_grad, cache.tokens[t], dpre);
    dh_rec = std::move(dh_prev);
  }
}

template <typename S>
struct DecoderStepCache {
  LstmStep<S> lstm;
  std::vector<int> input;
  Mat<S> attention;  // T x B
  Mat<S> context;    // H x B
  Mat<S> log_probs;  // V x B
};

// One decoder step over a batch: LSTM, attention over the latents, output
// projection and log-softmax.
template <typename S>
void decoder_step_forward(const ParamSetT<S>& p, const std::vector<Mat<S>>& latent,
                          DecoderStepCache<S>& s, const Mat<S>* projected) {
  lstm_forward(p.decoder, input_preact(p.decoder, p.embedding, projected, s.input), s.lstm);
  const Mat<S>& q = s.lstm.h;
  const auto len = static_cast<Index>(latent.size());
  Mat<S> scores(len, q.cols());
  for (Index j = 0; j < len; ++j) {
    scores.row(j) = (q.array() * latent[static_cast<std::size_t>(j)].array())
                        .colwise()
                        .sum()
                        .matrix();
  }
  s.attention = log_softmax_columns<S>(scores).array().exp().matrix();
  s.context = Mat<S>::Zero(q.rows(), q.cols());
  for (Index j = 0; j < len; ++j) {
    s.context.array() += latent[static_cast<std::size_t>(j)].array().rowwise() *
                         s.attention.row(j).array();
  }
  const Index h = q.rows();
  Mat<S> logits = p.output_weight.leftCols(h) * q;
  logits.noalias() += p.output_weight.rightCols(h) * s.context;
  s.log_probs = log_softmax_columns<S>(logits);
}

template <typename S>
struct HeadCache {
  TokenGrid targets;  // step-major, T + 1 steps
  std::vector<DecoderStepCache<S>> steps;
  Mat<S> pooled;  // H x B
  Mat<S> pre1;    // F x B
  Mat<S> act1;
  RowVec<S> estimate;
  std::vector<double> score_targets;
};

// Decoder (teacher forced) plus evaluator on a batch of latents. Returns the
// un-normalized sums of NLL and squared score error.
template <typename S>
std::pair<double, double> head_forward(const ParamSetT<S>& p, const std::vector<Mat<S>>& latent,
                                       const TokenGrid& tokens, int eos,
                                       std::vector<double> score_targets,
                                       HeadCache<S>& cache, const Mat<S>* projected) {
  const std::size_t len = latent.size();
  const Index h = latent.front().rows();
  const Index batch = latent.front().cols();
  cache.steps.assign(len + 1, DecoderStepCache<S>{});
  cache.targets.assign(len + 1, std::vector<int>());
  double nll = 0.0;
  Mat<S> h_prev = latent.back();
  Mat<S> c_prev = Mat<S>::Zero(h, batch);
  for (std::size_t k = 0; k <= len; ++k) {
    DecoderStepCache<S>& s = cache.steps[k];
    s.input = k == 0 ? std::vector<int>(static_cast<std::size_t>(batch), eos)
                     : tokens[k - 1];
    cache.targets[k] =
        k < len ? tokens[k] : std::vector<int>(static_cast<std::size_t>(batch), eos);
    s.lstm.h_prev = std::move(h_prev);
    s.lstm.c_prev = std::move(c_prev);
    decoder_step_forward(p, latent, s, projected);
    for (Index b = 0; b < batch; ++b) {
      nll -= static_cast<double>(s.log_probs(cache.targets[k][static_cast<std::size_t>(b)], b));
    }
    h_prev = s.lstm.h;
    c_prev = s.lstm.c;
  }

  cache.pooled = Mat<S>::Zero(h, batch);
  for (const Mat<S>& row : latent) cache.pooled += row;
  cache.pooled /= static_cast<S>(len);
  cache.pre1 = p.eval_w1 * cache.pooled;
  cache.pre1.colwise() += p.eval_b1.col(0);
  cache.act1 = cache.pre1.cwiseMax(S(0));
  cache.estimate = (p.eval_w2 * cache.act1).row(0).array() + p.eval_b2(0, 0);
  double sq = 0.0;
  for (Index b = 0; b < batch; ++b) {
    const double e =
        static_cast<double>(cache.estimate[b]) - score_targets[static_cast<std::size_t>(b)];
    sq += e * e;
  }
  cache.score_targets = std::move(score_targets);
  return {nll, sq};
}

// Backpropagates seq_weight * NLL + score_weight * squared error through the
// decoder and evaluator. Returns dL/d latent (one H x B block per row);
// decoder input gradients are summed per token into `token_grad`.
template <typename S>
std::vector<Mat<S>> head_backward(const ParamSetT<S>& p, ParamSetT<S>& g,
                                  const std::vector<Mat<S>>& latent,
                                  const HeadCache<S>& cache, S seq_weight, S score_weight,
                                  Mat<S>& token_grad) {
  const std::size_t len = latent.size();
  const Index h = latent.front().rows();
  const Index batch = latent.front().cols();
  std::vector<Mat<S>> d_latent(len, Mat<S>::Zero(h, batch));

  // Evaluator.
  RowVec<S> d_est(batch);
  for (Index b = 0; b < batch; ++b) {
    d_est[b] = score_weight * S(2) *
               (cache.estimate[b] -
                static_cast<S>(cache.score_targets[static_cast<std::size_t>(b)]));
  }
  g.eval_b2(0, 0) += d_est.sum();
  g.eval_w2.noalias() += d_est * cache.act1.transpose();
  Mat<S> d_pre1 = p.eval_w2.transpose() * d_est;
  d_pre1.array() *= (cache.pre1.array() > S(0)).template cast<S>();
  g.eval_w1.noalias() += d_pre1 * cache.pooled.transpose();
  g.eval_b1.col(0) += d_pre1.rowwise().sum();
  const Mat<S> d_pooled = (p.eval_w1.transpose() * d_pre1) / static_cast<S>(len);
  for (Mat<S>& d : d_latent) d += d_pooled;

  // Decoder, last step first.
  Mat<S> dh_rec = Mat<S>::Zero(h, batch);
  Mat<S> dc = Mat<S>::Zero(h, batch);
  Mat<S> dpre, dh_prev;
  for (std::size_t k = len + 1; k-- > 0;) {
    const DecoderStepCache<S>& s = cache.steps[k];
    Mat<S> d_logits = s.log_probs.array().exp().matrix();
    for (Index b = 0; b < batch; ++b) {
      d_logits(cache.targets[k][static_cast<std::size_t>(b)], b) -= S(1);
    }
    d_logits *= seq_weight;
    const Mat<S>& q = s.lstm.h;
    g.output_weight.leftCols(h).noalias() += d_logits * q.transpose();
    g.output_weight.rightCols(h).noalias() += d_logits * s.context.transpose();
    Mat<S> dq = p.output_weight.leftCols(h).transpose() * d_logits;
    const Mat<S> d_context = p.output_weight.rightCols(h).transpose() * d_logits;

    // context = sum_j a_j h_j
    Mat<S> d_att(static_cast<Index>(len), batch);
    for (std::size_t j = 0; j < len; ++j) {
      const auto jj = static_cast<Index>(j);
      d_latent[j].array() += d_context.array().rowwise() * s.attention.row(jj).array();
      d_att.row(jj) = (latent[j].array() * d_context.array()).colwise().sum().matrix();
    }
    // softmax backward
    const RowVec<S> weighted = (s.attention.array() * d_att.array()).colwise().sum().matrix();
    const Mat<S> d_scores = (s.attention.array() * (d_att.rowwise() - weighted).array()).matrix();
    // score_j = q . h_j
    for (std::size_t j = 0; j < len; ++j) {
      const auto jj = static_cast<Index>(j);
      dq.array() += latent[j].array().rowwise() * d_scores.row(jj).array();
      d_latent[j].array() += q.array().rowwise() * d_scores.row(jj).array();
    }
    dq += dh_rec;
    lstm_backward(p.decoder, g.decoder, s.lstm, dq, dc, dpre, dh_prev);
    scatter_add_columns(token_grad, s.input, dpre);
    dh_rec = std::move(dh_prev);
  }
  // The decoder's initial hidden state is the last latent row; its initial
  // cell state is the constant zero.
  d_latent.back() += dh_rec;
  return d_latent;
}

void check_tokens(std::size_t devices, std::span<const DeviceId> tokens) {
  if (tokens.empty()) throw InvalidSelectionError("empty token sequence");
  for (DeviceId t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= devices) {
      throw UnknownDeviceError("token " + std::to_string(t) +
                               " outside the device vocabulary");
    }
  }
}

TokenGrid single_grid(std::span<const DeviceId> tokens) {
  TokenGrid grid;
  for (DeviceId t : tokens) grid.push_back({t});
  return grid;
}

std::vector<MatrixXd> latent_columns(const LatentRep& latent) {
  std::vector<MatrixXd> out;
  for (Index t = 0; t < latent.rows.rows(); ++t) {
    out.emplace_back(latent.rows.row(t).transpose());
  }
  return out;
}

// Groups batch indices by sequence length; equal-length groups run as one
// dense matrix computation.
std::map<std::size_t, std::vector<std::size_t>> buckets(
    std::span<const ExampleView> batch) {
  std::map<std::size_t, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < batch.size(); ++i) out[batch[i].tokens.size()].push_back(i);
  return out;
}

TokenGrid bucket_grid(std::span<const ExampleView> batch,
                      const std::vector<std::size_t>& members, std::size_t len) {
  TokenGrid grid(len, std::vector<int>(members.size()));
  for (std::size_t b = 0; b < members.size(); ++b) {
    for (std::size_t t = 0; t < len; ++t) grid[t][b] = batch[members[b]].tokens[t];
  }
  return grid;
}

}  // namespace

LatentRep encode(const ModelBundle& bundle, std::span<const DeviceId> tokens) {
  check_tokens(bundle.sizes.devices, tokens);
  const EncoderCache<double> cache = encoder_forward<double>(bundle.params, single_grid(tokens), nullptr);
  LatentRep out;
  out.rows.resize(static_cast<Index>(tokens.size()),
                  static_cast<Index>(bundle.sizes.hidden));
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out.rows.row(static_cast<Index>(t)) = cache.steps[t].h.col(0).transpose();
  }
  return out;
}

Attention attend(const VectorXd& query, const MatrixXd& latent) {
  const VectorXd scores = latent * query;
  Attention out;
  out.weights = log_softmax_columns<double>(scores).array().exp().matrix();
  out.context = latent.transpose() * out.weights;
  return out;
}

DecoderState initial_decoder_state(const LatentRep& latent) {
  return {latent.rows.row(latent.rows.rows() - 1).transpose(),
          VectorXd::Zero(latent.rows.cols())};
}

DecodeStep decode_step(const ModelBundle& bundle, int prev_token,
                       const DecoderState& state, const LatentRep& latent) {
  DecoderStepCache<double> s;
  s.input = {prev_token};
  s.lstm.h_prev = state.h;
  s.lstm.c_prev = state.c;
  decoder_step_forward<double>(bundle.params, latent_columns(latent), s, nullptr);
  return {s.log_probs.col(0), {s.lstm.h.col(0), s.lstm.c.col(0)}};
}

std::vector<double> sequence_step_log_probs(const ModelBundle& bundle,
                                            std::span<const DeviceId> tokens,
                                            const LatentRep& latent) {
  check_tokens(bundle.sizes.devices, tokens);
  if (latent.rows.rows() == 0) throw InvalidSelectionError("empty latent");
  // The latent may be longer or shorter than the target sequence.
  std::vector<double> out;
  DecoderState state = initial_decoder_state(latent);
  int prev = bundle.vocab().eos();
  for (std::size_t k = 0; k <= tokens.size(); ++k) {
    const DecodeStep step = decode_step(bundle, prev, state, latent);
    const int target = k < tokens.size() ? tokens[k] : bundle.vocab().eos();
    out.push_back(step.log_probs[target]);
    state = step.next;
    prev = target;
  }
  return out;
}

double sequence_nll(const ModelBundle& bundle, std::span<const DeviceId> tokens,
                    const LatentRep& latent) {
  double nll = 0.0;
  for (double lp : sequence_step_log_probs(bundle, tokens, latent)) nll -= lp;
  return nll;
}

double evaluate_score(const ModelBundle& bundle, const LatentRep& latent) {
  const ParamSet& p = bundle.params;
  const VectorXd pooled = latent.rows.colwise().mean().transpose();
  const VectorXd act = (p.eval_w1 * pooled + p.eval_b1.col(0)).cwiseMax(0.0);
  return (p.eval_w2 * act)(0, 0) + p.eval_b2(0, 0);
}

MatrixXd evaluator_gradient(const ModelBundle& bundle, const LatentRep& latent) {
  const ParamSet& p = bundle.params;
  const VectorXd pooled = latent.rows.colwise().mean().transpose();
  const VectorXd pre = p.eval_w1 * pooled + p.eval_b1.col(0);
  const VectorXd d_pre =
      p.eval_w2.row(0).transpose().cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  const RowVectorXd d_pooled = (p.eval_w1.transpose() * d_pre).transpose() /
                               static_cast<double>(latent.rows.rows());
  return d_pooled.replicate(latent.rows.rows(), 1);
}

double latent_loss(const ModelBundle& bundle, std::span<const DeviceId> tokens,
                   double target, const LatentRep& latent, double alpha) {
  const double err = evaluate_score(bundle, latent) - target;
  return alpha * sequence_nll(bundle, tokens, latent) + (1.0 - alpha) * err * err;
}

namespace {

template <typename S>
struct Projections {
  Mat<S> encoder;
  Mat<S> decoder;

  explicit Projections(const ParamSetT<S>& p)
      : encoder(p.encoder.input_weight * p.embedding),
        decoder(p.decoder.input_weight * p.embedding) {}
};

LossParts finish_loss(double nll, double sq, double alpha, std::size_t n) {
  const double inv_n = 1.0 / static_cast<double>(n);
  LossParts out;
  out.sequence = nll * inv_n;
  out.score = sq * inv_n;
  out.total = alpha * out.sequence + (1.0 - alpha) * out.score;
  return out;
}

template <typename S>
LossParts backward_impl(const ParamSetT<S>& p, ParamSetT<S>& g, std::size_t devices,
                        std::span<const ExampleView> batch, double alpha,
                        std::vector<MatrixXd>* latent_grads) {
  if (batch.empty()) throw DataError("backward: empty batch");
  g.set_zero();
  const int eos = static_cast<int>(devices);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  if (latent_grads) latent_grads->assign(batch.size(), MatrixXd());
  const Projections<S> proj(p);
  Mat<S> enc_tokens = Mat<S>::Zero(proj.encoder.rows(), proj.encoder.cols());
  Mat<S> dec_tokens = Mat<S>::Zero(proj.decoder.rows(), proj.decoder.cols());
  double nll = 0.0;
  double sq = 0.0;
  for (const auto& [len, members] : buckets(batch)) {
    for (std::size_t i : members) check_tokens(devices, batch[i].tokens);
    TokenGrid grid = bucket_grid(batch, members, len);
    const EncoderCache<S> enc = encoder_forward(p, grid, &proj.encoder);
    std::vector<Mat<S>> latent;
    for (const LstmStep<S>& s : enc.steps) latent.push_back(s.h);
    std::vector<double> targets;
    for (std::size_t i : members) targets.push_back(batch[i].target);
    HeadCache<S> head;
    const auto [n, e] =
        head_forward(p, latent, grid, eos, std::move(targets), head, &proj.decoder);
    nll += n;
    sq += e;
    const std::vector<Mat<S>> d_latent =
        head_backward(p, g, latent, head, static_cast<S>(alpha * inv_n),
                      static_cast<S>((1.0 - alpha) * inv_n), dec_tokens);
    encoder_backward(p, g, enc, d_latent, enc_tokens);
    if (latent_grads) {
      for (std::size_t b = 0; b < members.size(); ++b) {
        MatrixXd lg(static_cast<Index>(len), d_latent.front().rows());
        for (std::size_t t = 0; t < len; ++t) {
          lg.row(static_cast<Index>(t)) =
              d_latent[t].col(static_cast<Index>(b)).transpose().template cast<double>();
        }
        (*latent_grads)[members[b]] = std::move(lg);
      }
    }
  }
  finish_input_grads(p.encoder, g.encoder, p.embedding, g.embedding, enc_tokens);
  finish_input_grads(p.decoder, g.decoder, p.embedding, g.embedding, dec_tokens);
  return finish_loss(nll, sq, alpha, batch.size());
}

}  // namespace

LossParts joint_loss(const ModelBundle& bundle, std::span<const ExampleView> batch,
                     double alpha) {
  if (batch.empty()) throw DataError("joint_loss: empty batch");
  const ParamSet& p = bundle.params;
  const Projections<double> proj(p);
  double nll = 0.0;
  double sq = 0.0;
  for (const auto& [len, members] : buckets(batch)) {
    for (std::size_t i : members) check_tokens(bundle.sizes.devices, batch[i].tokens);
    TokenGrid grid = bucket_grid(batch, members, len);
    const EncoderCache<double> enc = encoder_forward(p, grid, &proj.encoder);
    std::vector<MatrixXd> latent;
    for (const LstmStep<double>& s : enc.steps) latent.push_back(s.h);
    std::vector<double> targets;
    for (std::size_t i : members) targets.push_back(batch[i].target);
    HeadCache<double> head;
    const auto [n, e] = head_forward(p, latent, grid, bundle.vocab().eos(),
                                     std::move(targets), head, &proj.decoder);
    nll += n;
    sq += e;
  }
  return finish_loss(nll, sq, alpha, batch.size());
}

BackwardResult backward(ModelBundle& bundle, std::span<const ExampleView> batch,
                        double alpha, bool want_latent_grads) {
  BackwardResult result;
  result.loss = backward_impl(bundle.params, bundle.grads, bundle.sizes.devices, batch, alpha,
                              want_latent_grads ? &result.latent_grads : nullptr);
  return result;
}

LossParts backward_f32(const ParamSetF& params, ParamSetF& grads, const Vocabulary& vocab,
                       std::span<const ExampleView> batch, double alpha) {
  return backward_impl(params, grads, vocab.devices, batch, alpha, nullptr);
}

}  // namespace gcs::neural

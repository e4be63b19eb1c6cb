#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcs/neural/bundle.h"

namespace gcs::neural {

// E_s = [h_1 ... h_T] from a zero initial state.
// Throws InvalidSelectionError on an empty token list, UnknownDeviceError on
// a token outside the device range.
LatentRep encode(const ModelBundle& bundle, std::span<const DeviceId> tokens);

struct Attention {
  Eigen::VectorXd weights;  // a_j, sums to 1
  Eigen::VectorXd context;  // sum_j a_j h_j
};

// Dot-product attention of `query` over the rows of `latent`.
Attention attend(const Eigen::VectorXd& query, const Eigen::MatrixXd& latent);

struct DecoderState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

// Decoding starts from h = h_T (last latent row), c = 0, with EOS as the
// first input token.
DecoderState initial_decoder_state(const LatentRep& latent);

struct DecodeStep {
  Eigen::VectorXd log_probs;  // over the whole vocabulary
  DecoderState next;

  Eigen::VectorXd probs() const { return log_probs.array().exp(); }
};

DecodeStep decode_step(const ModelBundle& bundle, int prev_token,
                       const DecoderState& state, const LatentRep& latent);

// Teacher-forced -sum_t log P(s_t | s_<t, E_s) over `tokens` followed by EOS.
double sequence_nll(const ModelBundle& bundle, std::span<const DeviceId> tokens,
                    const LatentRep& latent);

// Per-step log-probabilities of the teacher-forced targets (tokens then EOS).
std::vector<double> sequence_step_log_probs(const ModelBundle& bundle,
                                            std::span<const DeviceId> tokens,
                                            const LatentRep& latent);

// Evaluator estimate (normalized units): two-layer ReLU net on the row mean.
double evaluate_score(const ModelBundle& bundle, const LatentRep& latent);

// d evaluate_score / d latent, same shape as latent.rows.
Eigen::MatrixXd evaluator_gradient(const ModelBundle& bundle,
                                   const LatentRep& latent);

struct ExampleView {
  std::span<const DeviceId> tokens;
  double target = 0.0;  // normalized score
};

struct LossParts {
  double total = 0.0;
  double sequence = 0.0;  // mean sequence NLL
  double score = 0.0;     // mean squared score error
};

// alpha * mean NLL + (1 - alpha) * mean (p - p_hat)^2 over the batch.
LossParts joint_loss(const ModelBundle& bundle,
                     std::span<const ExampleView> batch, double alpha);

// Loss of one example as a function of its latent (decoder and evaluator
// only); the object differentiated by `backward` with respect to E_s.
double latent_loss(const ModelBundle& bundle, std::span<const DeviceId> tokens,
                   double target, const LatentRep& latent, double alpha);

struct BackwardResult {
  LossParts loss;
  // d loss / d E_s per example, in batch order; filled on request.
  std::vector<Eigen::MatrixXd> latent_grads;
};

// Overwrites bundle.grads with the exact gradient of joint_loss.
BackwardResult backward(ModelBundle& bundle, std::span<const ExampleView> batch,
                        double alpha, bool want_latent_grads = false);

// The same loss and gradient evaluated in single precision; overwrites
// `grads`. The trainer's fast path.
LossParts backward_f32(const ParamSetF& params, ParamSetF& grads,
                       const Vocabulary& vocab, std::span<const ExampleView> batch,
                       double alpha);

}  // namespace gcs::neural

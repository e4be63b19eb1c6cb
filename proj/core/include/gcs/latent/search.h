#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcs/collectors/records.h"
#include "gcs/neural/bundle.h"

namespace gcs::latent {

using neural::LatentRep;
using neural::ModelBundle;

struct OptConfig {
  std::size_t top_k = 25;
  double step_size = 0.1;
  std::size_t max_steps = 20;
  double shrink = 0.5;
  double min_step = 1e-8;
  std::size_t beam_width = 5;
  std::size_t max_decode_length = 12;

  // Throws ConfigError unless K >= 1, step > 0, 0 < shrink < 1,
  // beam width >= 1 and 1 <= max decode length <= pool_size.
  void validate(std::size_t pool_size) const;
};

// Default decode cap: min(2 T, J).
std::size_t default_max_decode_length(std::size_t target, std::size_t pool_size);

// Differentiable scalar objective over latents.
class LatentObjective {
 public:
  virtual ~LatentObjective() = default;
  virtual double value(const LatentRep& latent) const = 0;
  virtual Eigen::MatrixXd gradient(const LatentRep& latent) const = 0;
};

// The trained evaluator omega.
class EvaluatorObjective final : public LatentObjective {
 public:
  explicit EvaluatorObjective(const ModelBundle& bundle) : bundle_(bundle) {}
  double value(const LatentRep& latent) const override;
  Eigen::MatrixXd gradient(const LatentRep& latent) const override;

 private:
  const ModelBundle& bundle_;
};

// Indices of the K highest-scored records, best first; ties keep collection
// order. K is clamped to the record count.
std::vector<std::size_t> top_k_indices(std::span<const collect::SelectionRecord> records,
                                       std::size_t k);

std::vector<LatentRep> top_k_starts(std::span<const collect::SelectionRecord> records,
                                    std::size_t k, const ModelBundle& bundle);

struct Candidate {
  LatentRep latent;
  double estimate = 0.0;
  std::size_t start_index = 0;
  std::size_t steps_taken = 0;
};

using CandidateSet = std::vector<Candidate>;

struct AscentResult {
  LatentRep latent;
  double estimate = 0.0;
  std::size_t accepted_steps = 0;
  // Objective value at the start and after every accepted step.
  std::vector<double> trajectory;
};

// Repeated E <- E + eta dOmega/dE. A step is kept only if the objective
// strictly increases; otherwise eta shrinks and the step is retried. Stops
// after max_steps accepted steps or when eta falls below min_step.
// Throws NumericError on a non-finite gradient.
AscentResult ascend(const LatentRep& start, const LatentObjective& objective,
                    const OptConfig& cfg);

// Highest estimate; ties go to the earliest candidate.
// Throws DataError on an empty set.
std::size_t select_best(const CandidateSet& candidates);

// Beam search over the decoder. Beams are ranked by accumulated
// log-probability; emitted devices and PAD are masked, EOS is masked at the
// first step, and only EOS is allowed once a beam holds max_length tokens.
ClientSelection beam_decode(const LatentRep& latent, const ModelBundle& bundle,
                            std::size_t beam_width, std::size_t max_length);

struct GcsResult {
  ClientSelection selection;
  CandidateSet candidates;
  std::size_t best = 0;
  double start_estimate = 0.0;  // best estimate among unoptimized starts
};

// top_k_starts -> ascend each -> select_best -> beam_decode.
GcsResult gcs_select(const ModelBundle& bundle,
                     std::span<const collect::SelectionRecord> records,
                     const OptConfig& cfg);

}  // namespace gcs::latent

#include "gcs/latent/search.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gcs/errors.h"
#include "gcs/neural/seq2seq.h"

namespace gcs::latent {

void OptConfig::validate(std::size_t pool_size) const {
  if (top_k == 0) throw ConfigError("opt: top_k must be >= 1");
  if (!(step_size > 0.0)) throw ConfigError("opt: step_size must be > 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("opt: shrink must be in (0, 1)");
  if (!(min_step > 0.0)) throw ConfigError("opt: min_step must be > 0");
  if (beam_width == 0) throw ConfigError("opt: beam_width must be >= 1");
  if (max_decode_length == 0 || max_decode_length > pool_size) {
    throw ConfigError("opt: max_decode_length must be in [1, J]");
  }
}

std::size_t default_max_decode_length(std::size_t target, std::size_t pool_size) {
  return std::min(2 * target, pool_size);
}

double EvaluatorObjective::value(const LatentRep& latent) const {
  return neural::evaluate_score(bundle_, latent);
}

Eigen::MatrixXd EvaluatorObjective::gradient(const LatentRep& latent) const {
  return neural::evaluator_gradient(bundle_, latent);
}

std::vector<std::size_t> top_k_indices(std::span<const collect::SelectionRecord> records,
                                       std::size_t k) {
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return records[a].score > records[b].score;
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

std::vector<LatentRep> top_k_starts(std::span<const collect::SelectionRecord> records,
                                    std::size_t k, const ModelBundle& bundle) {
  if (records.empty()) throw DataError("top_k_starts: no records");
  std::vector<LatentRep> out;
  for (std::size_t i : top_k_indices(records, k)) {
    out.push_back(neural::encode(bundle, records[i].selection.span()));
  }
  return out;
}

AscentResult ascend(const LatentRep& start, const LatentObjective& objective,
                    const OptConfig& cfg) {
  AscentResult out{start, objective.value(start), 0, {}};
  out.trajectory.push_back(out.estimate);
  double eta = cfg.step_size;
  while (out.accepted_steps < cfg.max_steps && eta >= cfg.min_step) {
    const Eigen::MatrixXd grad = objective.gradient(out.latent);
    if (!grad.allFinite()) {
      throw NumericError("ascend: non-finite gradient after " +
                         std::to_string(out.accepted_steps) + " accepted steps");
    }
    bool accepted = false;
    while (eta >= cfg.min_step) {
      LatentRep trial{out.latent.rows + eta * grad};
      const double v = objective.value(trial);
      if (v > out.estimate) {
        out.latent = std::move(trial);
        out.estimate = v;
        ++out.accepted_steps;
        out.trajectory.push_back(v);
        accepted = true;
        break;
      }
      eta *= cfg.shrink;
    }
    if (!accepted) break;
  }
  return out;
}

std::size_t select_best(const CandidateSet& candidates) {
  if (candidates.empty()) throw DataError("select_best: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].estimate > candidates[best].estimate) best = i;
  }
  return best;
}

namespace {

struct Hypothesis {
  std::vector<DeviceId> tokens;
  double log_prob = 0.0;
  neural::DecoderState state;
};

struct Expansion {
  std::size_t parent;
  int token;
  double log_prob;
};

}  // namespace

ClientSelection beam_decode(const LatentRep& latent, const ModelBundle& bundle,
                            std::size_t beam_width, std::size_t max_length) {
  const neural::Vocabulary vocab = bundle.vocab();
  if (beam_width == 0) throw ConfigError("beam_decode: beam width must be >= 1");
  max_length = std::clamp<std::size_t>(max_length, 1, vocab.devices);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  std::vector<Hypothesis> live{{{}, 0.0, neural::initial_decoder_state(latent)}};
  std::vector<DeviceId> best_finished;
  double best_finished_lp = kNegInf;

  while (!live.empty()) {
    std::vector<Expansion> expansions;
    std::vector<neural::DecoderState> next_states;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const Hypothesis& hyp = live[h];
      const int prev = hyp.tokens.empty() ? vocab.eos() : hyp.tokens.back();
      neural::DecodeStep step = neural::decode_step(bundle, prev, hyp.state, latent);
      Eigen::VectorXd& lp = step.log_probs;
      lp[vocab.pad()] = kNegInf;
      for (DeviceId t : hyp.tokens) lp[t] = kNegInf;
      if (hyp.tokens.empty()) lp[vocab.eos()] = kNegInf;
      if (hyp.tokens.size() >= max_length) {
        lp.head(static_cast<Eigen::Index>(vocab.devices)).setConstant(kNegInf);
      }
      for (Eigen::Index t = 0; t < lp.size(); ++t) {
        if (lp[t] == kNegInf) continue;
        expansions.push_back({h, static_cast<int>(t), hyp.log_prob + lp[t]});
      }
      next_states.push_back(std::move(step.next));
    }
    std::stable_sort(expansions.begin(), expansions.end(),
                     [](const Expansion& a, const Expansion& b) {
                       return a.log_prob > b.log_prob;
                     });
    if (expansions.size() > beam_width) expansions.resize(beam_width);

    std::vector<Hypothesis> next;
    for (const Expansion& e : expansions) {
      const Hypothesis& parent = live[e.parent];
      if (e.token == vocab.eos()) {
        if (e.log_prob > best_finished_lp) {
          best_finished_lp = e.log_prob;
          best_finished = parent.tokens;
        }
        continue;
      }
      Hypothesis child{parent.tokens, e.log_prob, next_states[e.parent]};
      child.tokens.push_back(e.token);
      next.push_back(std::move(child));
    }
    // Log-probabilities only fall as hypotheses grow, so no live beam can
    // overtake a finished one that already beats it.
    std::erase_if(next, [&](const Hypothesis& h) { return h.log_prob <= best_finished_lp; });
    live = std::move(next);
  }
  return ClientSelection(std::move(best_finished));
}

GcsResult gcs_select(const ModelBundle& bundle,
                     std::span<const collect::SelectionRecord> records,
                     const OptConfig& cfg) {
  cfg.validate(bundle.sizes.devices);
  const std::vector<LatentRep> starts = top_k_starts(records, cfg.top_k, bundle);
  const EvaluatorObjective objective(bundle);
  GcsResult out;
  out.start_estimate = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    AscentResult a = ascend(starts[i], objective, cfg);
    out.start_estimate = std::max(out.start_estimate, a.trajectory.front());
    out.candidates.push_back({std::move(a.latent), a.estimate, i, a.accepted_steps});
  }
  out.best = select_best(out.candidates);
  out.selection = beam_decode(out.candidates[out.best].latent, bundle,
                              cfg.beam_width, cfg.max_decode_length);
  return out;
}

}  // namespace gcs::latent

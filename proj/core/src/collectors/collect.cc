#include "gcs/collectors/collect.h"

#include "gcs/errors.h"
#include "gcs/rng.h"

namespace gcs::collect {

std::uint64_t session_seed(std::uint64_t root_seed, PolicyKind collector,
                           std::size_t index) {
  return child_seed(root_seed, "collect/" + to_string(collector), index);
}

CollectResult collect_records(std::shared_ptr<const fl::Environment> env,
                              const std::vector<CollectorSpec>& collectors,
                              const PolicyConfig& policy_cfg,
                              const Budget& budget, std::uint64_t root_seed,
                              bool fixed_reference) {
  budget.validate();
  policy_cfg.favor.validate();
  policy_cfg.fedmarl.validate();
  const fl::SimConfig& sim = env->sim;
  CollectResult result;
  result.records.budget = budget;
  result.records.pool_fingerprint = env->pool.fingerprint();

  for (const CollectorSpec& spec : collectors) {
    const std::string tag = to_string(spec.kind);
    for (std::size_t s = 0; s < spec.sessions; ++s) {
      const std::uint64_t seed = session_seed(root_seed, spec.kind, s);
      fl::FlSession session(env, seed);
      auto policy = make_policy(spec.kind, policy_cfg, env->pool.size(),
                                sim.participants, child_seed(seed, "policy"));
      std::vector<double> accuracy_path;
      double score_sum = 0.0;
      for (std::size_t r = 0; r < sim.rounds; ++r) {
        if (fixed_reference) session.reset_model();
        const ClientSelection selection = policy->select(session);
        const fl::RoundOutcome outcome = session.run_round(selection, budget);
        policy->observe(session, outcome);
        accuracy_path.push_back(outcome.accuracy);
        score_sum += outcome.score.comprehensive;
        result.records.records.push_back(SelectionRecord{
            outcome.selection, outcome.score.comprehensive, outcome.score, tag,
            seed, outcome.round});
      }
      result.sessions.push_back(SessionSummary{
          tag, seed, favor_reward(accuracy_path, policy_cfg.favor),
          score_sum / static_cast<double>(sim.rounds), accuracy_path.back()});
    }
  }
  verify_records(result.records, env->pool.size());
  return result;
}

}  // namespace gcs::collect

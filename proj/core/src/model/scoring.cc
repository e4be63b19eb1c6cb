#include "gcs/model/scoring.h"

#include <algorithm>
#include <cmath>

#include "gcs/errors.h"

namespace gcs {
namespace {

void check_selection(const ClientSelection& selection, const DevicePool& pool) {
  if (selection.empty()) throw InvalidSelectionError("empty client selection");
  selection.validate(pool.size());
}

}  // namespace

double round_latency(const ClientSelection& selection, const DevicePool& pool,
                     std::size_t round, int epochs) {
  check_selection(selection, pool);
  double worst = 0.0;
  for (DeviceId id : selection.tokens()) {
    const DeviceProfile& d = pool.at(id);
    const double avail = d.availability_at(round);
    worst = std::max(worst, avail * d.comm_latency_s +
                                avail * d.comp_latency_s_per_epoch * epochs);
  }
  return worst;
}

double round_energy(const ClientSelection& selection, const DevicePool& pool,
                    std::size_t /*round*/, int epochs) {
  check_selection(selection, pool);
  double total = 0.0;
  for (DeviceId id : selection.tokens()) {
    const DeviceProfile& d = pool.at(id);
    total += d.comm_energy_j + d.comp_energy_j_per_epoch * epochs;
  }
  return total;
}

ScoreBreakdown comprehensive_score(double perf, double latency_s,
                                   double energy_j, const Budget& budget) {
  if (!std::isfinite(perf) || !std::isfinite(latency_s) ||
      !std::isfinite(energy_j)) {
    throw NumericError("comprehensive_score: non-finite input");
  }
  if (!(latency_s > 0.0) || !(energy_j > 0.0)) {
    throw NumericError("comprehensive_score: latency and energy must be > 0");
  }
  double score = perf;
  if (budget.latency_budget_s < latency_s) {
    score *= std::pow(budget.latency_budget_s / latency_s,
                      budget.latency_penalty_exp);
  }
  if (budget.energy_budget_j < energy_j) {
    score *= std::pow(budget.energy_budget_j / energy_j,
                      budget.energy_penalty_exp);
  }
  return ScoreBreakdown{perf, latency_s, energy_j, score};
}

ScoreBreakdown score_selection(const ClientSelection& selection,
                               const DevicePool& pool, std::size_t round,
                               int epochs, double perf, const Budget& budget) {
  return comprehensive_score(perf, round_latency(selection, pool, round, epochs),
                             round_energy(selection, pool, round, epochs),
                             budget);
}

}  // namespace gcs

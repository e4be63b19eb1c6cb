#pragma once

#include <cstddef>

#include "gcs/model/types.h"

namespace gcs {

// Round latency: max over selected devices of
//   availability * comm_latency + availability * comp_latency * epochs.
double round_latency(const ClientSelection& selection, const DevicePool& pool,
                     std::size_t round, int epochs);

// Round energy: sum over selected devices of comm_energy + comp_energy * epochs.
// Availability does not scale energy.
double round_energy(const ClientSelection& selection, const DevicePool& pool,
                    std::size_t round, int epochs);

// perf * (L/p_L)^(1[L<p_L] a) * (E/p_E)^(1[E<p_E] b).
// Throws NumericError on non-finite inputs or non-positive p_L / p_E.
ScoreBreakdown comprehensive_score(double perf, double latency_s,
                                   double energy_j, const Budget& budget);

// Convenience: latency, energy and score of `selection` in one call.
ScoreBreakdown score_selection(const ClientSelection& selection,
                               const DevicePool& pool, std::size_t round,
                               int epochs, double perf, const Budget& budget);

}  // namespace gcs

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcs/model/types.h"

namespace gcs::collect {

struct SelectionRecord {
  ClientSelection selection;
  double score = 0.0;
  ScoreBreakdown breakdown;
  std::string collector;
  std::uint64_t session_seed = 0;
  std::size_t round = 0;
};

struct RecordSet {
  std::vector<SelectionRecord> records;
  Budget budget;
  std::string pool_fingerprint;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
};

// Throws DataError if a record's score differs from comprehensive_score of
// its breakdown under `budget`, or if a selection is invalid for `pool_size`.
void verify_records(const RecordSet& set, std::size_t pool_size);

// One JSON object per line:
// {"collector","session_seed","round","selection","perf","latency_s",
//  "energy_j","score"}. Doubles use shortest round-trip decimals.
void write_records(std::ostream& out, const std::vector<SelectionRecord>& records);
std::vector<SelectionRecord> read_records(std::istream& in);

// The same shuffle-augmentation the trainer sees: each record followed by
// `shuffles_per_record` copies with permuted token order and the same score.
RecordSet augment_records(const RecordSet& set, std::size_t shuffles_per_record,
                          std::uint64_t seed);

}  // namespace gcs::collect

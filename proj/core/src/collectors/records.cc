#include "gcs/collectors/records.h"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "gcs/errors.h"
#include "gcs/model/scoring.h"
#include "gcs/rng.h"

namespace gcs::collect {

void verify_records(const RecordSet& set, std::size_t pool_size) {
  for (std::size_t i = 0; i < set.records.size(); ++i) {
    const SelectionRecord& r = set.records[i];
    r.selection.validate(pool_size);
    const ScoreBreakdown check =
        comprehensive_score(r.breakdown.perf, r.breakdown.total_latency_s,
                            r.breakdown.total_energy_j, set.budget);
    if (check.comprehensive != r.score || r.breakdown.comprehensive != r.score) {
      throw DataError("record " + std::to_string(i) +
                      ": stored score does not match its breakdown");
    }
  }
}

void write_records(std::ostream& out, const std::vector<SelectionRecord>& records) {
  for (const SelectionRecord& r : records) {
    nlohmann::ordered_json j;
    j["collector"] = r.collector;
    j["session_seed"] = r.session_seed;
    j["round"] = r.round;
    j["selection"] = r.selection.tokens();
    j["perf"] = r.breakdown.perf;
    j["latency_s"] = r.breakdown.total_latency_s;
    j["energy_j"] = r.breakdown.total_energy_j;
    j["score"] = r.score;
    out << j.dump() << '\n';
  }
}

std::vector<SelectionRecord> read_records(std::istream& in) {
  std::vector<SelectionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      SelectionRecord r;
      r.collector = j.at("collector").get<std::string>();
      r.session_seed = j.at("session_seed").get<std::uint64_t>();
      r.round = j.at("round").get<std::size_t>();
      r.selection = ClientSelection(j.at("selection").get<std::vector<DeviceId>>());
      r.breakdown.perf = j.at("perf").get<double>();
      r.breakdown.total_latency_s = j.at("latency_s").get<double>();
      r.breakdown.total_energy_j = j.at("energy_j").get<double>();
      r.score = j.at("score").get<double>();
      r.breakdown.comprehensive = r.score;
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("records line " + std::to_string(line_no) + ": " + e.what());
    } catch (const InvalidSelectionError& e) {
      throw DataError("records line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

RecordSet augment_records(const RecordSet& set, std::size_t shuffles_per_record,
                          std::uint64_t seed) {
  RecordSet out;
  out.budget = set.budget;
  out.pool_fingerprint = set.pool_fingerprint;
  out.records.reserve(set.records.size() * (shuffles_per_record + 1));
  Rng rng = make_rng(seed, "augment");
  for (const SelectionRecord& r : set.records) {
    out.records.push_back(r);
    for (std::size_t k = 0; k < shuffles_per_record; ++k) {
      std::vector<DeviceId> tokens = r.selection.tokens();
      std::shuffle(tokens.begin(), tokens.end(), rng);
      SelectionRecord copy = r;
      copy.selection = ClientSelection(std::move(tokens));
      out.records.push_back(std::move(copy));
    }
  }
  return out;
}

}  // namespace gcs::collect

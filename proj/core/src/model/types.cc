#include "gcs/model/types.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <string_view>
#include <unordered_set>

#include "gcs/errors.h"
#include "gcs/rng.h"

namespace gcs {
namespace {

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

void mix(std::uint64_t& h, double v) {
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
}

}  // namespace

DevicePool::DevicePool(std::vector<DeviceProfile> devices)
    : devices_(std::move(devices)) {
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    const DeviceProfile& d = devices_[i];
    if (d.id != static_cast<DeviceId>(i)) {
      throw DataError("device pool ids must be 0..J-1 in order; position " +
                      std::to_string(i) + " holds id " + std::to_string(d.id));
    }
    if (!positive(d.comm_latency_s) || !positive(d.comp_latency_s_per_epoch) ||
        !positive(d.comm_energy_j) || !positive(d.comp_energy_j_per_epoch)) {
      throw DataError("device " + std::to_string(d.id) +
                      ": latency and energy coefficients must be positive");
    }
    if (d.availability.empty() ||
        !std::all_of(d.availability.begin(), d.availability.end(), positive)) {
      throw DataError("device " + std::to_string(d.id) +
                      ": availability trace must be non-empty and positive");
    }
  }
}

const DeviceProfile& DevicePool::at(DeviceId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= devices_.size()) {
    throw UnknownDeviceError("unknown device id " + std::to_string(id));
  }
  return devices_[static_cast<std::size_t>(id)];
}

std::string DevicePool::fingerprint() const {
  std::uint64_t h = fnv1a64("gcs-pool");
  for (const DeviceProfile& d : devices_) {
    h = splitmix64(h ^ static_cast<std::uint64_t>(d.id));
    mix(h, d.comm_latency_s);
    mix(h, d.comp_latency_s_per_epoch);
    mix(h, d.comm_energy_j);
    mix(h, d.comp_energy_j_per_epoch);
    for (double a : d.availability) mix(h, a);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ClientSelection::ClientSelection(std::vector<DeviceId> tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw InvalidSelectionError("empty client selection");
  std::unordered_set<DeviceId> seen;
  for (DeviceId id : tokens_) {
    if (id < 0) {
      throw InvalidSelectionError("negative device id " + std::to_string(id));
    }
    if (!seen.insert(id).second) {
      throw InvalidSelectionError("duplicate device id " + std::to_string(id));
    }
  }
}

void ClientSelection::validate(std::size_t pool_size) const {
  if (tokens_.empty()) throw InvalidSelectionError("empty client selection");
  for (DeviceId id : tokens_) {
    if (static_cast<std::size_t>(id) >= pool_size) {
      throw UnknownDeviceError("unknown device id " + std::to_string(id));
    }
  }
}

std::vector<DeviceId> ClientSelection::sorted() const {
  std::vector<DeviceId> ids = tokens_;
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool ClientSelection::same_set(const ClientSelection& other) const {
  return size() == other.size() && sorted() == other.sorted();
}

void Budget::validate() const {
  if (!(latency_budget_s > 0.0) || !std::isfinite(latency_budget_s)) {
    throw ConfigError("latency budget must be positive");
  }
  if (!(energy_budget_j > 0.0) || !std::isfinite(energy_budget_j)) {
    throw ConfigError("energy budget must be positive");
  }
  if (!(latency_penalty_exp >= 0.0) || !(energy_penalty_exp >= 0.0)) {
    throw ConfigError("penalty exponents must be non-negative");
  }
}

}  // namespace gcs

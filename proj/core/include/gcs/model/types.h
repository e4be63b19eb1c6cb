#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gcs {

using DeviceId = int;

// Latency/energy coefficients of one client device. Availability multipliers
// scale both latency terms in a given round; traces shorter than the session
// are cycled.
struct DeviceProfile {
  DeviceId id = 0;
  double comm_latency_s = 1.0;
  double comp_latency_s_per_epoch = 1.0;
  double comm_energy_j = 1.0;
  double comp_energy_j_per_epoch = 1.0;
  std::vector<double> availability{1.0};

  double availability_at(std::size_t round) const {
    return availability[round % availability.size()];
  }
};

class DevicePool {
 public:
  DevicePool() = default;
  // Throws DataError unless ids are exactly {0, ..., J-1} in order and every
  // coefficient is strictly positive.
  explicit DevicePool(std::vector<DeviceProfile> devices);

  std::size_t size() const { return devices_.size(); }
  const DeviceProfile& at(DeviceId id) const;
  const std::vector<DeviceProfile>& devices() const { return devices_; }

  // Stable 64-bit hash over every coefficient, rendered as 16 hex digits.
  std::string fingerprint() const;

 private:
  std::vector<DeviceProfile> devices_;
};

// An ordered token sequence of device ids that denotes a set.
class ClientSelection {
 public:
  ClientSelection() = default;
  // Throws InvalidSelectionError on an empty list, a negative id, or a
  // duplicate id.
  explicit ClientSelection(std::vector<DeviceId> tokens);

  // Additionally requires every id < pool_size (UnknownDeviceError) and
  // size() <= pool_size.
  void validate(std::size_t pool_size) const;

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::vector<DeviceId>& tokens() const { return tokens_; }
  std::span<const DeviceId> span() const { return tokens_; }

  // Ids in ascending order; two selections denote the same set iff their
  // sorted ids are equal.
  std::vector<DeviceId> sorted() const;
  bool same_set(const ClientSelection& other) const;

  friend bool operator==(const ClientSelection&,
                         const ClientSelection&) = default;

 private:
  std::vector<DeviceId> tokens_;
};

struct Budget {
  double latency_budget_s = 25.0;
  double energy_budget_j = 30.0;
  double latency_penalty_exp = 2.0;
  double energy_penalty_exp = 2.0;

  // Throws ConfigError when L <= 0, E <= 0, a < 0 or b < 0.
  void validate() const;
};

struct ScoreBreakdown {
  double perf = 0.0;
  double total_latency_s = 0.0;
  double total_energy_j = 0.0;
  double comprehensive = 0.0;
};

}  // namespace gcs

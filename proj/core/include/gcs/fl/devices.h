#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "gcs/model/types.h"

namespace gcs::fl {

// Base coefficients of one hardware class before per-device jitter.
struct DeviceArchetype {
  std::string_view name;
  double comm_latency_s;
  double comp_latency_s_per_epoch;
  double comm_energy_j;
  double comp_energy_j_per_epoch;
};

// Fast/slow compute x good/poor link, plus two battery-weak variants.
inline constexpr std::array<DeviceArchetype, 6> kArchetypes{{
    {"fast-good", 1.0, 1.6, 0.6, 0.9},
    {"fast-poor", 5.0, 1.6, 2.4, 0.9},
    {"slow-good", 1.0, 5.0, 0.6, 2.0},
    {"slow-poor", 5.0, 5.0, 2.4, 2.0},
    {"weak-fast", 1.5, 2.0, 1.2, 3.2},
    {"weak-slow", 3.0, 6.0, 1.8, 4.0},
}};

struct PoolSpec {
  std::size_t num_clients = 100;
  // Relative jitter applied to every coefficient: U(1 - j, 1 + j).
  double jitter = 0.2;
  std::size_t availability_length = 24;
  // Availability multipliers are drawn from U(1, 1 + spread).
  double availability_spread = 0.6;
};

// Device i takes archetype i mod 6, jittered per coefficient.
DevicePool generate_pool(const PoolSpec& spec, std::uint64_t seed);

std::string_view archetype_of(DeviceId id);

}  // namespace gcs::fl

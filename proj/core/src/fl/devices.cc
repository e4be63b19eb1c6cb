#include "gcs/fl/devices.h"

#include <random>

#include "gcs/errors.h"
#include "gcs/rng.h"

namespace gcs::fl {

DevicePool generate_pool(const PoolSpec& spec, std::uint64_t seed) {
  if (spec.num_clients == 0) throw ConfigError("pool needs >= 1 client");
  if (!(spec.jitter >= 0.0 && spec.jitter < 1.0)) {
    throw ConfigError("pool jitter must be in [0, 1)");
  }
  if (spec.availability_length == 0 || !(spec.availability_spread >= 0.0)) {
    throw ConfigError("availability trace needs length >= 1 and spread >= 0");
  }
  Rng rng = make_rng(seed, "device-pool");
  std::uniform_real_distribution<double> jitter(1.0 - spec.jitter, 1.0 + spec.jitter);
  std::uniform_real_distribution<double> avail(1.0, 1.0 + spec.availability_spread);
  std::vector<DeviceProfile> devices;
  devices.reserve(spec.num_clients);
  for (std::size_t i = 0; i < spec.num_clients; ++i) {
    const DeviceArchetype& a = kArchetypes[i % kArchetypes.size()];
    DeviceProfile d;
    d.id = static_cast<DeviceId>(i);
    d.comm_latency_s = a.comm_latency_s * jitter(rng);
    d.comp_latency_s_per_epoch = a.comp_latency_s_per_epoch * jitter(rng);
    d.comm_energy_j = a.comm_energy_j * jitter(rng);
    d.comp_energy_j_per_epoch = a.comp_energy_j_per_epoch * jitter(rng);
    d.availability.resize(spec.availability_length);
    for (double& m : d.availability) m = avail(rng);
    devices.push_back(std::move(d));
  }
  return DevicePool(std::move(devices));
}

std::string_view archetype_of(DeviceId id) {
  return kArchetypes[static_cast<std::size_t>(id) % kArchetypes.size()].name;
}

}  // namespace gcs::fl

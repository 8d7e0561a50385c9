#pragma once

// Total optical storage time over (alpha_QM, L) for the two placements:
// repeater (d2 = 0, states wait for the classical round trip) and slow-light
// (d2 at its upper bound, the quantum signal is slow enough that no relay-side
// buffer is needed). The fixed buffer m is optimised for the analytic rate.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ffqkd/geometry.hpp"

namespace ffqkd {

enum class StorageConfig { Repeater, SlowLight };

std::string_view to_string(StorageConfig config) noexcept;

struct StorageCell {
  double alpha_qm = 0;
  double total_km = 0;
  double d2_km = 0;
  std::int64_t m = 0;
  double p0 = 0;
  double t_qm1_s = 0;
  double t_qm2_s = 0;               ///< m tau, the longest fixed-buffer hold
  double total_storage_s = 0;       ///< t_qm1 + t_qm2
  double mean_buffer_wait_s = 0;    ///< expected fixed-buffer hold per pairing
  double simulated_buffer_wait_s = -1;  ///< Monte Carlo estimate, -1 when skipped
  double skr_bits_per_use = 0;
  bool feasible = true;
};

struct StorageMap {
  StorageConfig config = StorageConfig::Repeater;
  std::vector<double> alpha_qm_grid;
  std::vector<double> total_km_grid;
  std::vector<StorageCell> cells;  ///< one row per L, alpha_qm varying fastest
};

/// Expected fixed-buffer hold (slots) per pairing under the matching model.
double mean_buffer_wait_slots(double p0, std::int64_t m);

StorageMap storage_time_map(StorageConfig config, std::span<const double> alpha_qm_grid,
                            std::span<const double> total_km_grid, const ChannelParams& params,
                            std::uint64_t seed = 1, std::int64_t trials = 2000);

}  // namespace ffqkd

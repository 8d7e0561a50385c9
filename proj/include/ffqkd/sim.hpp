#pragma once

// Slot-synchronous Monte Carlo of the two-sided heralding and matching
// discipline. Each slot both idle sides attempt the relay measurement
// (success p0). A heralded state waits in the fixed buffer for at most m
// further slots while the other side keeps trying; if the buffer expires it
// is discarded. Once both sides hold a state, the final measurement succeeds
// with probability p1, otherwise both are dropped and the cycle restarts.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ffqkd {

struct SimConfig {
  double p0 = 0.1;
  double p1 = 1.0;
  std::int64_t m = 0;
  std::int64_t trials = 100000;     ///< delivered successes to simulate
  std::uint64_t seed = 1;
  int histogram_bins = 0;           ///< wait histogram bins; 0 picks 64
  int streams = 16;                 ///< independent RNG streams (fixed, independent of threads)
  std::int64_t horizon_slots = 0;   ///< fixed-horizon run for the empirical rate; 0 = slots used by the main run
};

struct Histogram {
  std::vector<double> bin_lo;
  std::vector<double> bin_hi;
  std::vector<double> mass;  ///< normalised, sums to 1
};

struct SimStats {
  double mean_wait_slots = 0;
  double stderr_slots = 0;
  double mean_storage_slots = 0;  ///< fixed-buffer wait of the earlier herald, per pairing
  double empirical_rate = 0;      ///< successes per slot over the fixed horizon
  std::int64_t successes = 0;
  std::int64_t total_slots = 0;
  std::int64_t horizon_slots = 0;
  std::int64_t horizon_successes = 0;
  Histogram storage;              ///< one bin per slot 0..m (equal-width bins when m > 65535)
  Histogram wait;
  std::string generator = "mt19937_64";
  std::uint64_t seed = 0;
};

SimStats simulate_heralding(const SimConfig& config);

/// Worker threads for embarrassingly parallel loops: FFQKD_THREADS if set,
/// otherwise hardware concurrency.
int worker_threads();

/// Runs fn(i) for i in [0, count) on worker_threads() threads. Callers write
/// results into per-index slots so output order never depends on scheduling.
void parallel_for(int count, const std::function<void(int)>& fn);

}  // namespace ffqkd

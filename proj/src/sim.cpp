#include "ffqkd/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace ffqkd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : rng_(seed) {}

  // (0, 1]
  double uniform() { return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53; }

  // Number of Bernoulli(p) trials up to and including the first success.
  std::int64_t geometric(double p) {
    if (p >= 1) return 1;
    const double k = std::floor(std::log(uniform()) / std::log1p(-p));
    if (k >= 4e18) return std::numeric_limits<std::int64_t>::max() / 4;
    return 1 + static_cast<std::int64_t>(k);
  }

 private:
  std::mt19937_64 rng_;
};

struct Pairing {
  std::int64_t slots;    // slots elapsed, including discarded attempts
  std::int64_t storage;  // slots the earlier herald spent waiting
};

// One pass from an empty buffer until both sides hold a state.
Pairing next_pairing(Stream& s, double p0, std::int64_t m) {
  const double q = 1 - p0;
  const double any = 1 - q * q;
  const double both_given_any = p0 * p0 / any;
  std::int64_t slots = 0;
  for (;;) {
    slots += s.geometric(any);
    if (s.uniform() <= both_given_any) return {slots, 0};
    const std::int64_t other = s.geometric(p0);
    if (other <= m) return {slots + other, other};
    slots += m;
  }
}

// Per-slot storage bins while they stay small, equal-width bins beyond.
struct StorageBinning {
  std::size_t bins;
  double width;
  explicit StorageBinning(std::int64_t m)
      : bins(m + 1 <= 65536 ? static_cast<std::size_t>(m) + 1 : 1024),
        width(static_cast<double>(m + 1) / static_cast<double>(bins)) {}
  std::size_t of(std::int64_t storage) const {
    return std::min(static_cast<std::size_t>(static_cast<double>(storage) / width), bins - 1);
  }
};

struct Partial {
  std::int64_t successes = 0;
  std::int64_t slots = 0;
  double mean = 0;  // Welford
  double m2 = 0;
  std::vector<std::int64_t> storage_counts;
  std::int64_t pairings = 0;
  double storage_sum = 0;
  std::vector<std::int64_t> waits;
};

Partial run_stream(const SimConfig& c, std::uint64_t seed, std::int64_t trials) {
  Partial out;
  const StorageBinning binning(c.m);
  out.storage_counts.assign(binning.bins, 0);
  out.waits.reserve(static_cast<std::size_t>(trials));
  Stream s(seed);
  for (std::int64_t t = 0; t < trials; ++t) {
    std::int64_t wait = 0;
    for (;;) {
      const Pairing p = next_pairing(s, c.p0, c.m);
      wait += p.slots;
      ++out.storage_counts[binning.of(p.storage)];
      ++out.pairings;
      out.storage_sum += static_cast<double>(p.storage);
      if (c.p1 >= 1 || s.uniform() <= c.p1) break;
    }
    ++out.successes;
    out.slots += wait;
    out.waits.push_back(wait);
    const double delta = static_cast<double>(wait) - out.mean;
    out.mean += delta / static_cast<double>(out.successes);
    out.m2 += delta * (static_cast<double>(wait) - out.mean);
  }
  return out;
}

// Successes completed within a fixed number of slots.
std::int64_t run_horizon(const SimConfig& c, std::uint64_t seed, std::int64_t horizon) {
  Stream s(seed);
  std::int64_t elapsed = 0, done = 0;
  for (;;) {
    const Pairing p = next_pairing(s, c.p0, c.m);
    elapsed += p.slots;
    if (elapsed > horizon) return done;
    if (c.p1 >= 1 || s.uniform() <= c.p1) ++done;
  }
}

}  // namespace

int worker_threads() {
  if (const char* env = std::getenv("FFQKD_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, const std::function<void(int)>& fn) {
  const int threads = std::min(worker_threads(), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

SimStats simulate_heralding(const SimConfig& c) {
  if (!(c.p0 > 0 && c.p0 <= 1)) throw std::domain_error("simulate_heralding: p0 must lie in (0, 1]");
  if (!(c.p1 > 0 && c.p1 <= 1)) throw std::domain_error("simulate_heralding: p1 must lie in (0, 1]");
  if (c.m < 0) throw std::domain_error("simulate_heralding: m must be >= 0");
  if (c.trials < 1) throw std::domain_error("simulate_heralding: trials must be >= 1");
  if (c.streams < 1) throw std::domain_error("simulate_heralding: streams must be >= 1");

  const int streams = static_cast<int>(std::min<std::int64_t>(c.streams, c.trials));
  std::vector<Partial> parts(static_cast<std::size_t>(streams));
  parallel_for(streams, [&](int i) {
    const std::int64_t share = c.trials / streams + (i < c.trials % streams ? 1 : 0);
    parts[static_cast<std::size_t>(i)] = run_stream(c, splitmix64(c.seed ^ (2ULL * static_cast<std::uint64_t>(i))), share);
  });

  SimStats out;
  out.seed = c.seed;
  const StorageBinning binning(c.m);
  std::vector<std::int64_t> storage(binning.bins, 0);
  std::int64_t pairings = 0;
  double storage_sum = 0, mean = 0, m2 = 0;
  std::int64_t n = 0, max_wait = 1;
  for (const Partial& p : parts) {
    // Chan et al. pairwise merge of running moments.
    const std::int64_t total = n + p.successes;
    const double delta = p.mean - mean;
    mean += delta * static_cast<double>(p.successes) / static_cast<double>(total);
    m2 += p.m2 + delta * delta * static_cast<double>(n) * static_cast<double>(p.successes) / static_cast<double>(total);
    n = total;
    out.total_slots += p.slots;
    pairings += p.pairings;
    storage_sum += p.storage_sum;
    for (std::size_t k = 0; k < storage.size(); ++k) storage[k] += p.storage_counts[k];
    for (std::int64_t w : p.waits) max_wait = std::max(max_wait, w);
  }
  out.successes = n;
  out.mean_wait_slots = mean;
  out.stderr_slots = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
  out.mean_storage_slots = storage_sum / static_cast<double>(pairings);

  for (std::size_t k = 0; k < storage.size(); ++k) {
    out.storage.bin_lo.push_back(static_cast<double>(k) * binning.width);
    out.storage.bin_hi.push_back(static_cast<double>(k + 1) * binning.width);
    out.storage.mass.push_back(static_cast<double>(storage[k]) / static_cast<double>(pairings));
  }

  const int bins = c.histogram_bins > 0 ? c.histogram_bins : 64;
  const double width = std::max(1.0, std::ceil(static_cast<double>(max_wait) / bins));
  std::vector<std::int64_t> wait_counts(static_cast<std::size_t>(bins), 0);
  for (const Partial& p : parts)
    for (std::int64_t w : p.waits) {
      const auto b = std::min<std::size_t>(static_cast<std::size_t>((static_cast<double>(w) - 1) / width),
                                           static_cast<std::size_t>(bins) - 1);
      ++wait_counts[b];
    }
  for (int b = 0; b < bins; ++b) {
    out.wait.bin_lo.push_back(1 + b * width);
    out.wait.bin_hi.push_back(1 + (b + 1) * width);
    out.wait.mass.push_back(static_cast<double>(wait_counts[static_cast<std::size_t>(b)]) / static_cast<double>(n));
  }

  out.horizon_slots = c.horizon_slots > 0 ? c.horizon_slots : out.total_slots;
  std::vector<std::int64_t> horizon_done(static_cast<std::size_t>(streams), 0);
  const std::int64_t per_stream = out.horizon_slots / streams;
  parallel_for(streams, [&](int i) {
    horizon_done[static_cast<std::size_t>(i)] =
        run_horizon(c, splitmix64(c.seed ^ (2ULL * static_cast<std::uint64_t>(i) + 1)), per_stream);
  });
  for (std::int64_t d : horizon_done) out.horizon_successes += d;
  out.horizon_slots = per_stream * streams;
  out.empirical_rate = out.horizon_slots > 0
                           ? static_cast<double>(out.horizon_successes) / static_cast<double>(out.horizon_slots)
                           : 0.0;
  return out;
}

}  // namespace ffqkd

#include <cmath>
#include <cstdlib>
#include <numeric>

#include "doctest.h"
#include "ffqkd/rates.hpp"
#include "ffqkd/sim.hpp"
#include "ffqkd/storage.hpp"

using namespace ffqkd;

namespace {

SimConfig config(double p0, double p1, std::int64_t m, std::int64_t trials, std::uint64_t seed = 3) {
  SimConfig c;
  c.p0 = p0;
  c.p1 = p1;
  c.m = m;
  c.trials = trials;
  c.seed = seed;
  return c;
}

double total_mass(const Histogram& h) { return std::accumulate(h.mass.begin(), h.mass.end(), 0.0); }

}  // namespace

TEST_CASE("deterministic success") {
  const SimStats s = simulate_heralding(config(1.0, 1.0, 4, 1000));
  CHECK(s.mean_wait_slots == 1.0);
  CHECK(s.stderr_slots == 0.0);
  CHECK(s.empirical_rate == 1.0);
}

TEST_CASE("mean wait against the analytic expectation") {
  for (auto [p0, m] : {std::pair{0.1, std::int64_t{5}}, {0.1, 0}, {0.3, 2}, {0.05, 40}}) {
    const SimStats s = simulate_heralding(config(p0, 1.0, m, 200000));
    CHECK(std::fabs(s.mean_wait_slots - z0_mean_wait(p0, m)) < 3 * s.stderr_slots);
  }
  const SimStats s = simulate_heralding(config(0.1, 1.0, 0, 200000));
  CHECK(std::fabs(s.mean_wait_slots - 100.0) < 3 * s.stderr_slots);
}

TEST_CASE("final-stage failures multiply the wait") {
  const SimStats s = simulate_heralding(config(0.2, 0.25, 3, 200000));
  CHECK(std::fabs(s.mean_wait_slots - z0_mean_wait(0.2, 3) / 0.25) < 3 * s.stderr_slots);
}

TEST_CASE("same seed reproduces the run regardless of threads") {
  const SimConfig c = config(0.07, 0.6, 9, 50000, 42);
  setenv("FFQKD_THREADS", "1", 1);
  const SimStats a = simulate_heralding(c);
  setenv("FFQKD_THREADS", "3", 1);
  const SimStats b = simulate_heralding(c);
  unsetenv("FFQKD_THREADS");
  CHECK(a.mean_wait_slots == b.mean_wait_slots);
  CHECK(a.stderr_slots == b.stderr_slots);
  CHECK(a.empirical_rate == b.empirical_rate);
  CHECK(a.storage.mass == b.storage.mass);
  CHECK(a.wait.mass == b.wait.mass);
  const SimStats other = simulate_heralding(config(0.07, 0.6, 9, 50000, 43));
  CHECK(other.mean_wait_slots != a.mean_wait_slots);
}

TEST_CASE("renewal identity") {
  for (auto [p0, p1, m] : {std::tuple{0.1, 1.0, std::int64_t{5}}, {0.02, 0.5, 60}, {0.5, 0.1, 1}}) {
    const SimStats s = simulate_heralding(config(p0, p1, m, 200000));
    const double sd = s.stderr_slots * std::sqrt(static_cast<double>(s.successes));
    const double rel = std::hypot(s.stderr_slots / s.mean_wait_slots,
                                  sd / (s.mean_wait_slots * std::sqrt(static_cast<double>(s.horizon_successes))));
    CHECK(std::fabs(s.empirical_rate * s.mean_wait_slots - 1) < 3 * rel);
  }
}

TEST_CASE("storage histogram support and normalisation") {
  for (std::int64_t m : {0, 1, 7, 30}) {
    const SimStats s = simulate_heralding(config(0.15, 1.0, m, 50000));
    REQUIRE(s.storage.mass.size() == static_cast<std::size_t>(m + 1));
    for (std::int64_t k = 0; k <= m; ++k) {
      CHECK(s.storage.bin_lo[static_cast<std::size_t>(k)] == static_cast<double>(k));
      CHECK(s.storage.bin_hi[static_cast<std::size_t>(k)] == static_cast<double>(k + 1));
    }
    CHECK(total_mass(s.storage) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(total_mass(s.wait) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.wait.bin_lo.front() == 1.0);
  }
}

TEST_CASE("large buffers use equal-width storage bins") {
  const SimStats s = simulate_heralding(config(1e-4, 1.0, 200000, 2000));
  CHECK(s.storage.mass.size() == 1024);
  CHECK(s.storage.bin_hi.back() >= 200001.0);
  CHECK(total_mass(s.storage) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mean fixed-buffer wait") {
  CHECK(mean_buffer_wait_slots(0.3, 0) == 0.0);
  CHECK(mean_buffer_wait_slots(1.0, 10) == 0.0);
  for (auto [p0, m] : {std::pair{0.1, std::int64_t{5}}, {0.02, 100}, {0.5, 3}}) {
    // direct sum over the pairing outcomes
    const double q = 1 - p0, both = p0 * p0 / (1 - q * q);
    double num = 0, den = both;
    for (std::int64_t k = 1; k <= m; ++k) {
      const double w = (1 - both) * p0 * std::pow(q, static_cast<double>(k - 1));
      num += w * static_cast<double>(k);
      den += w;
    }
    CHECK(mean_buffer_wait_slots(p0, m) == doctest::Approx(num / den).epsilon(1e-12));
    const SimStats s = simulate_heralding(config(p0, 1.0, m, 200000));
    CHECK(s.mean_storage_slots == doctest::Approx(num / den).epsilon(0.02));
  }
}

TEST_CASE("storage map configurations") {
  const ChannelParams p;
  const std::vector<double> alphas{0.0, 0.2}, lengths{100.0, 400.0};
  const StorageMap rep = storage_time_map(StorageConfig::Repeater, alphas, lengths, p);
  const StorageMap slow = storage_time_map(StorageConfig::SlowLight, alphas, lengths, p);
  REQUIRE(rep.cells.size() == 4);
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    const StorageCell& r = rep.cells[i];
    const StorageCell& s = slow.cells[i];
    CHECK(r.feasible);
    CHECK(s.feasible);
    CHECK(r.d2_km == 0.0);
    CHECK(s.d2_km == doctest::Approx(d2_upper_bound(s.total_km, p)));
    CHECK(r.total_storage_s == doctest::Approx(r.t_qm1_s + r.t_qm2_s));
    CHECK(r.t_qm2_s == doctest::Approx(static_cast<double>(r.m) * p.tau_s));
    CHECK(std::fabs(s.t_qm1_s) < 1e-15);
    // the classical round trip dominates in the repeater placement
    CHECK(r.total_storage_s > 10 * s.total_storage_s);
  }
  CHECK(rep.cells[0].alpha_qm == 0.0);
  CHECK(rep.cells[1].alpha_qm == 0.2);
  CHECK(rep.cells[2].total_km == 400.0);
}

TEST_CASE("storage reduces to the fixed buffer at short distance") {
  const ChannelParams p;
  const std::vector<double> alphas{0.2}, lengths{1e-3};
  const StorageMap rep = storage_time_map(StorageConfig::Repeater, alphas, lengths, p);
  const StorageCell& c = rep.cells[0];
  CHECK(c.total_storage_s == doctest::Approx(c.t_qm2_s).epsilon(1e-3));
}

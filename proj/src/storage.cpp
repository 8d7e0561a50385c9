#include "ffqkd/storage.hpp"

#include <cmath>
#include <stdexcept>

#include "ffqkd/optimize.hpp"
#include "ffqkd/sim.hpp"

namespace ffqkd {

std::string_view to_string(StorageConfig config) noexcept {
  return config == StorageConfig::Repeater ? "repeater" : "slow-light";
}

double mean_buffer_wait_slots(double p0, std::int64_t m) {
  if (!(p0 > 0 && p0 <= 1)) throw std::domain_error("mean_buffer_wait_slots: p0 must lie in (0, 1]");
  if (m < 0) throw std::domain_error("mean_buffer_wait_slots: m must be >= 0");
  if (m == 0 || p0 == 1) return 0.0;
  const double q = 1 - p0;
  const double both = p0 * p0 / (1 - q * q);
  // truncated geometric on 1..m: (1 - (m+1) q^m + m q^{m+1}) / (p0 (1 - q^m))
  const double lq = std::log1p(-p0);
  const double qm = std::exp(static_cast<double>(m) * lq);
  const double md = static_cast<double>(m);
  const double tail = -std::expm1(md * lq);
  const double mean = (1 - (md + 1) * qm + md * qm * q) / (p0 * tail);
  // pairings that end with a stored state need the other side within m slots;
  // weight by that probability against simultaneous heralds
  const double stored = (1 - both) * tail;
  return stored * mean / (both + stored);
}

StorageMap storage_time_map(StorageConfig config, std::span<const double> alpha_qm_grid,
                            std::span<const double> total_km_grid, const ChannelParams& params,
                            std::uint64_t seed, std::int64_t trials) {
  if (alpha_qm_grid.empty() || total_km_grid.empty())
    throw std::invalid_argument("storage_time_map: grids must be nonempty");
  StorageMap out;
  out.config = config;
  out.alpha_qm_grid.assign(alpha_qm_grid.begin(), alpha_qm_grid.end());
  out.total_km_grid.assign(total_km_grid.begin(), total_km_grid.end());
  const std::size_t na = alpha_qm_grid.size();
  out.cells.resize(na * total_km_grid.size());
  SweepSpec spec;
  if (config == StorageConfig::Repeater) spec.fixed_d2_km = 0.0;
  else spec.d2_at_bound = true;
  parallel_for(static_cast<int>(out.cells.size()), [&](int k) {
    StorageCell& cell = out.cells[static_cast<std::size_t>(k)];
    cell.alpha_qm = alpha_qm_grid[static_cast<std::size_t>(k) % na];
    cell.total_km = total_km_grid[static_cast<std::size_t>(k) / na];
    try {
      ChannelParams p = params;
      p.alpha_qm_db_per_km = cell.alpha_qm;
      const CurvePoint pt = optimize_point(cell.total_km, p, spec);
      const PracticalGeometry g = solve_geometry(cell.total_km, pt.best_d2_km, p, pt.best_m);
      cell.d2_km = g.d2_km;
      cell.m = g.m;
      cell.p0 = pt.breakdown.p0;
      cell.t_qm1_s = g.t_qm1_s;
      cell.t_qm2_s = g.t_qm2_s;
      cell.total_storage_s = g.t_qm1_s + g.t_qm2_s;
      cell.skr_bits_per_use = pt.skr_bits_per_use;
      if (cell.p0 > 0) {
        cell.mean_buffer_wait_s = mean_buffer_wait_slots(cell.p0, cell.m) * p.tau_s;
        // each restart costs O(1) draws; skip when restarts per success would be huge
        if (cell.p0 * static_cast<double>(cell.m + 1) > 1e-3) {
          SimConfig sc;
          sc.p0 = cell.p0;
          sc.p1 = 1.0;
          sc.m = cell.m;
          sc.trials = trials;
          sc.seed = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k + 1));
          sc.streams = 4;
          sc.horizon_slots = 1;
          cell.simulated_buffer_wait_s = simulate_heralding(sc).mean_storage_slots * p.tau_s;
        }
      }
    } catch (const std::exception&) {
      cell.feasible = false;
    }
  });
  return out;
}

}  // namespace ffqkd

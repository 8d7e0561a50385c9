#pragma once

// Node placement and buffer sizing for the balanced single-rail chain
//
//   Alice --d1-- relay --d1-- source --d2-- Charlie --d2-- source --d1-- relay --d1-- Bob
//
// so that L = 2 (2 d1 + d2). Buffers d_QM1 hold the teleported state until the
// relay's classical result arrives; d_QM2 = c_QM m tau is the fixed storage loop.

#include <cstdint>

#include "ffqkd/bounds.hpp"

namespace ffqkd {

inline constexpr double kSpeedOfLightKmPerS = 299792.458;

struct ChannelParams {
  double alpha_db_per_km = 0.2;
  double alpha_qm_db_per_km = 0.2;
  double c_q = 2.0 / 3.0 * kSpeedOfLightKmPerS;   ///< quantum channel, km/s
  double c_c = 0.9997 * kSpeedOfLightKmPerS;      ///< classical channel, km/s
  double c_qm = 2.0 / 3.0 * kSpeedOfLightKmPerS;  ///< buffer medium, km/s
  double tau_s = 1e-9;                            ///< pulse period (1 / repetition rate)
  double eta_switch = 0.99;
  double eta_det = 0.93;
  double dark_rate_hz = 0.01;
  int base_b = 2;                                 ///< radix of the digital delay register

  /// Parameters used for the practical-protocol figures. Buffers made of
  /// fibre (alpha_QM = 0.2) propagate at c_q; anything else at c.
  static ChannelParams figure_defaults(double alpha_qm_db_per_km);

  double dark_click_prob() const noexcept { return dark_rate_hz * tau_s; }
  double speed_ratio() const noexcept { return c_q / c_c; }

  /// Throws std::domain_error naming the first out-of-range field.
  void validate() const;
};

struct PracticalGeometry {
  double total_km = 0;
  double d1_km = 0;
  double d2_km = 0;
  double d_qm1_km = 0;
  double d_qm2_km = 0;
  std::int64_t m = 0;
  int switch_uses = 1;

  // propagation times, s
  double t1_s = 0;
  double t2_s = 0;
  double t_c_s = 0;
  double t_qm1_s = 0;
  double t_qm2_s = 0;

  Transmissivity eta1;
  Transmissivity eta2;
  Transmissivity eta_qm1;
  Transmissivity eta_qm2;
  Transmissivity eta_c;  ///< everything between the relay and Charlie's measurement
};

/// Largest admissible d2: where d_QM1 reaches zero, or L/2 if that binds first.
double d2_upper_bound(double total_km, const ChannelParams& params);

/// Throws InfeasibleError (carrying the bound) when d2 exceeds d2_upper_bound.
PracticalGeometry solve_geometry(double total_km, double d2_km, const ChannelParams& params, std::int64_t m);

/// Same placement with a different fixed-buffer length m (no revalidation).
PracticalGeometry with_storage(PracticalGeometry geometry, const ChannelParams& params, std::int64_t m);

/// Worst-case switch traversals b * ceil(log_b m) + 1; m = 0 uses the routing switch only.
int switch_count(std::int64_t m, int base);

/// eta_QM1 * eta_QM2 * eta_switch^switch_uses
Transmissivity buffer_transmissivity(const PracticalGeometry& geometry, const ChannelParams& params);

}  // namespace ffqkd

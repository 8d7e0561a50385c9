#pragma once

#include <cstdint>
#include <string_view>

#include "ffqkd/bounds.hpp"
#include "ffqkd/geometry.hpp"

namespace ffqkd {

enum class RateMode { Analytic, Numeric };

std::string_view to_string(RateMode mode) noexcept;

/// Prefactor on the small-chi relay success P0 = kappa0 * eta1 / 2. The
/// brute-force Fock computation gives kappa0 -> 1 as chi -> 0 (see the
/// RelaySuccessConstant test), so 1 is the default everywhere.
inline constexpr double kDefaultRelayKappa = 1.0;

struct RateBreakdown {
  RateMode mode = RateMode::Analytic;
  double p0 = 0;              ///< first-stage (relay) success probability
  double p1 = 0;              ///< final-stage success probability
  double q = 1;               ///< 1 - p0
  double z0 = 0;              ///< mean slots until both relays have heralded (cutoff m)
  double z1 = 0;              ///< mean final-stage attempts, 1 / p1
  double repeater_rate = 0;   ///< R = 1 / (z0 z1), successes per slot
  double raw_rate_bits = 0;   ///< r, key bits per success
  double skr_bits_per_use = 0;
  double skr_bits_per_s = 0;
};

double p0_small_chi(Transmissivity eta1, double kappa0 = kDefaultRelayKappa);

/// 2 chi^2 eta_c; throws ProbabilityError when the result exceeds 1.
double p1_small_chi(double chi, Transmissivity eta_c);

/// Mean number of slots until both sides hold a heralded state, when a
/// state may wait at most m further slots: (1+2q-2q^{m+1}) / (p0 (1+q-2q^{m+1})).
double z0_mean_wait(double p0, std::int64_t m);

/// Printed small-chi closed form in bits/s; equals r/(z0 z1 tau) with r = 1.
double skr_small_chi_closed_form(double eta1, double eta_c, double chi, std::int64_t m, double tau_s,
                                 double kappa0 = kDefaultRelayKappa);

/// Analytic pipeline (r = 1 bit per success) for a solved geometry.
RateBreakdown skr_small_chi(const PracticalGeometry& geometry, const ChannelParams& params, double chi,
                            double kappa0 = kDefaultRelayKappa);

/// Combine per-stage probabilities and a raw key rate into a breakdown.
RateBreakdown assemble_rate(RateMode mode, double p0, double p1, std::int64_t m, double raw_rate_bits,
                            double tau_s);

/// Small-chi single-relay (twin-field type) reference: 2 chi^2 sqrt(eta) per slot, r = 1.
double single_node_small_chi(Transmissivity eta_total, double chi);

}  // namespace ffqkd

#pragma once

// Fock-space model of the single-rail chain, one side at a time.
//
// Per side: Alice's TMSV source gives modes (A, C); a single photon split on
// a balanced beamsplitter gives (D, B). C and D each cross d1 of fibre to the
// relay, which performs a threshold-detector Bell measurement. B then travels
// to Charlie through the buffers (transmissivity eta_C), where the two sides'
// B modes are measured the same way. What remains is rho over (A, A').

#include <cstdint>

#include "ffqkd/fock.hpp"
#include "ffqkd/geometry.hpp"
#include "ffqkd/rates.hpp"

namespace ffqkd {

inline constexpr int kDefaultCutoff = 8;

/// max(cutoff, smallest cutoff whose TMSV tail is below eps)
int effective_cutoff(double chi, int cutoff, double eps = fock::kDefaultTruncation);

struct RelayState {
  fock::DensityMatrix rho_ab;  ///< normalised, modes (A, B), dims (cutoff+1, 2)
  double p0;                   ///< probability of a heralded relay outcome
};

/// Relay stage with both accepted click patterns, the Psi- outcome corrected
/// by a phase flip on B.
RelayState relay_state(double chi, Transmissivity eta1, const fock::DetectorModel& det, int cutoff);

struct ProtocolState {
  fock::DensityMatrix rho;  ///< normalised, modes (A, A')
  double p0;
  double p1;                ///< final-stage success given two heralded relays
};

enum class ContractionPath {
  Generic,  ///< density-matrix operations on the four-mode state
  Fast,     ///< contracts a 4x4 effective POVM element against two copies
};

ProtocolState final_stage(const RelayState& side, Transmissivity eta_c, const fock::DetectorModel& det,
                          ContractionPath path = ContractionPath::Fast);

/// Throws ProbabilityError when p1 underflows below 1e-300.
ProtocolState full_protocol_state(double chi, Transmissivity eta1, Transmissivity eta_c,
                                  const fock::DetectorModel& det, int cutoff = kDefaultCutoff,
                                  ContractionPath path = ContractionPath::Fast);

/// r = max(RCI, 0) with Bob's mode A' as decoder.
double raw_key_bits(const fock::DensityMatrix& rho_aa);

fock::DetectorModel detector_from(const ChannelParams& params);

RateBreakdown numeric_skr(const PracticalGeometry& geometry, const ChannelParams& params, double chi,
                          int cutoff = kDefaultCutoff);

/// Same, reusing a relay state computed for geometry.eta1.
RateBreakdown numeric_skr(const RelayState& side, const PracticalGeometry& geometry, const ChannelParams& params);

// Single central relay reference: TMSV at both ends, each arm crossing L/2,
// one threshold Bell measurement, no buffers. Rate per slot r * P.
struct SingleNodeState {
  fock::DensityMatrix rho;  ///< normalised, modes (A, A')
  double probability;
};

SingleNodeState single_node_state(double chi, Transmissivity eta_arm, const fock::DetectorModel& det,
                                  int cutoff = kDefaultCutoff);

struct SingleNodeRate {
  double probability = 0;
  double raw_rate_bits = 0;
  double skr_bits_per_use = 0;
  double skr_bits_per_s = 0;
};

SingleNodeRate single_node_skr(double total_km, const ChannelParams& params, double chi,
                               int cutoff = kDefaultCutoff);

}  // namespace ffqkd

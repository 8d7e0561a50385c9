#include <array>
#include <cmath>

#include "doctest.h"
#include "ffqkd/errors.hpp"
#include "ffqkd/protocol.hpp"

using namespace ffqkd;
using namespace ffqkd::fock;

namespace {

StateVector bell_target() {
  const double h = 1 / std::sqrt(2.0);
  StateVector s(2, 1);
  s.add(std::array{1, 0}, h);
  s.add(std::array{0, 1}, h);
  return s;
}

}  // namespace

TEST_CASE("relay success constant") {
  for (double eta1 : {1.0, 0.5, 0.1}) {
    const RelayState side = relay_state(1e-3, Transmissivity(eta1), DetectorModel::ideal(), kDefaultCutoff);
    CHECK(side.p0 / (eta1 / 2) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(side.rho_ab.trace() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("lossless chain yields a Bell pair") {
  const ProtocolState s =
      full_protocol_state(1e-3, Transmissivity(1.0), Transmissivity(1.0), DetectorModel::ideal());
  CHECK(fidelity(s.rho, bell_target()) >= 0.999);
  CHECK(raw_key_bits(s.rho) >= 0.999);
}

TEST_CASE("final-stage success at small chi") {
  const double chi = 1e-3;
  for (double eta_c : {1.0, 0.5, 0.05}) {
    const ProtocolState s =
        full_protocol_state(chi, Transmissivity(0.3), Transmissivity(eta_c), DetectorModel::ideal());
    CHECK(s.p1 / (2 * chi * chi * eta_c) == doctest::Approx(1.0).epsilon(5e-3));
  }
}

TEST_CASE("fast and generic contractions agree") {
  const DetectorModel det{0.93, 1e-8};
  for (double chi : {0.01, 0.1, 0.25}) {
    const RelayState side = relay_state(chi, Transmissivity(0.2), det, kDefaultCutoff);
    const ProtocolState fast = final_stage(side, Transmissivity(0.4), det, ContractionPath::Fast);
    const ProtocolState generic = final_stage(side, Transmissivity(0.4), det, ContractionPath::Generic);
    CHECK(fast.p1 == doctest::Approx(generic.p1).epsilon(1e-10));
    CHECK((fast.rho.matrix() - generic.rho.matrix()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("protocol states are physical") {
  const DetectorModel det{0.93, 1e-8};
  for (double chi : {0.01, 0.25}) {
    const ProtocolState s = full_protocol_state(chi, Transmissivity(0.1), Transmissivity(0.3), det);
    const PhysicalityReport r = physicality(s.rho);
    CHECK(r.min_eigenvalue > -1e-10);
    CHECK(r.hermitian_defect < 1e-12);
    CHECK(r.trace == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.p0 > 0);
    CHECK(s.p0 <= 1);
    CHECK(s.p1 > 0);
    CHECK(s.p1 <= 1);
  }
}

TEST_CASE("cutoff convergence") {
  const DetectorModel det{0.93, 1e-8};
  const double chi = 0.25;
  auto rate = [&](int cutoff) {
    const ProtocolState s = full_protocol_state(chi, Transmissivity(0.5), Transmissivity(0.5), det, cutoff);
    return s.p0 * s.p1 * raw_key_bits(s.rho);
  };
  const double a = rate(effective_cutoff(chi, 8)), b = rate(effective_cutoff(chi, 12));
  CHECK(a > 0);
  CHECK(std::fabs(a - b) / b < 1e-3);
  CHECK(effective_cutoff(chi, 2) >= required_cutoff(chi));
}

TEST_CASE("numeric rate approaches the analytic one at small chi") {
  ChannelParams params;
  params.eta_switch = 1;
  params.eta_det = 1;
  params.dark_rate_hz = 0;
  const PracticalGeometry g = solve_geometry(100, 10, params, 5);
  const RateBreakdown numeric = numeric_skr(g, params, 0.01);
  const RateBreakdown analytic = skr_small_chi(g, params, 0.01);
  CHECK(numeric.p0 / analytic.p0 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(numeric.p1 / analytic.p1 == doctest::Approx(1.0).epsilon(0.02));
  CHECK(numeric.skr_bits_per_use / analytic.skr_bits_per_use == doctest::Approx(1.0).epsilon(0.02));
  CHECK(numeric.mode == RateMode::Numeric);
}

TEST_CASE("no light, no key") {
  ChannelParams params;
  params.dark_rate_hz = 0;
  params.eta_det = 1e-9;
  const PracticalGeometry g = solve_geometry(100, 10, params, 5);
  CHECK(numeric_skr(g, params, 0.1).skr_bits_per_use < 1e-12);
}

TEST_CASE("dark counts cost key rate") {
  ChannelParams clean, noisy;
  clean.dark_rate_hz = 0;
  noisy.dark_rate_hz = 1e5;
  const PracticalGeometry g = solve_geometry(300, 30, clean, 20);
  CHECK(numeric_skr(g, noisy, 0.1).skr_bits_per_use < numeric_skr(g, clean, 0.1).skr_bits_per_use);
}

TEST_CASE("single relay reference") {
  ChannelParams params;
  params.dark_rate_hz = 0;
  params.eta_det = 1;
  const double chi = 1e-3;
  for (double L : {10.0, 100.0, 200.0}) {
    const SingleNodeRate r = single_node_skr(L, params, chi);
    const Transmissivity eta = eta_from_distance(L, params.alpha_db_per_km);
    CHECK(r.probability / single_node_small_chi(eta, chi) == doctest::Approx(1.0).epsilon(5e-3));
    CHECK(r.raw_rate_bits > 0.99);
  }
  const SingleNodeState s = single_node_state(1e-3, Transmissivity(1.0), DetectorModel::ideal());
  CHECK(fidelity(s.rho, bell_target()) >= 0.999);
}

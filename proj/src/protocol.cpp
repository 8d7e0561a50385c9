#include "ffqkd/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "ffqkd/errors.hpp"

namespace ffqkd {

using fock::ClickPattern;
using fock::DensityMatrix;
using fock::DetectorModel;
using fock::StateVector;

namespace {

// mode labels of one relay side
constexpr int kA = 0, kC = 1, kD = 2, kB = 3;

constexpr double kUnderflow = 1e-300;

// Kraus operators of pure loss on a mode holding at most one photon.
std::array<Eigen::Matrix2d, 2> qubit_loss(double eta) {
  Eigen::Matrix2d k0 = Eigen::Matrix2d::Zero(), k1 = Eigen::Matrix2d::Zero();
  k0(0, 0) = 1;
  k0(1, 1) = std::sqrt(eta);
  k1(0, 1) = std::sqrt(1 - eta);
  return {k0, k1};
}

// Effective POVM element on (B, B') for loss eta_c on both modes followed by
// the balanced threshold measurement with outcome `pattern`. Index 2b + b'.
Eigen::Matrix4cd effective_element(double eta_c, const DetectorModel& det, ClickPattern pattern) {
  // balanced beamsplitter from (b, b') <= 1 photon each to outputs (k, n-k) <= 2
  Eigen::Matrix<std::complex<double>, 9, 4> u = Eigen::Matrix<std::complex<double>, 9, 4>::Zero();
  const double h = 1 / std::sqrt(2.0);
  for (int b = 0; b < 2; ++b)
    for (int bp = 0; bp < 2; ++bp) {
      const auto col = fock::beamsplitter_column(b, bp, h, h);
      for (int k = 0; k <= b + bp; ++k) u(3 * k + (b + bp - k), 2 * b + bp) = col[k];
    }
  const bool first = pattern == ClickPattern::FirstOnly || pattern == ClickPattern::Both;
  const bool second = pattern == ClickPattern::SecondOnly || pattern == ClickPattern::Both;
  Eigen::Matrix<double, 9, 1> w;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l)
      w(3 * k + l) = (first ? det.click(k) : det.no_click(k)) * (second ? det.click(l) : det.no_click(l));
  const Eigen::Matrix4cd core = u.adjoint() * w.asDiagonal() * u;
  const auto kraus = qubit_loss(eta_c);
  Eigen::Matrix4cd e = Eigen::Matrix4cd::Zero();
  for (const auto& ka : kraus)
    for (const auto& kb : kraus) {
      Eigen::Matrix4d l;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) l(r, c) = ka(r / 2, c / 2) * kb(r % 2, c % 2);
      e += l.transpose().cast<std::complex<double>>() * core * l.cast<std::complex<double>>();
    }
  return e;
}

// rho_out[(a a'), (x x')] = sum E[(c c'), (b b')] s[(a b), (x c)] s[(a' b'), (x' c')]
Eigen::MatrixXcd contract(const Eigen::MatrixXcd& s, int dim_a, const Eigen::Matrix4cd& e) {
  const int n = dim_a * dim_a;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  for (int a = 0; a < dim_a; ++a)
    for (int x = 0; x < dim_a; ++x) {
      std::complex<double> left[2][2];
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) left[b][c] = s(2 * a + b, 2 * x + c);
      for (int ap = 0; ap < dim_a; ++ap)
        for (int xp = 0; xp < dim_a; ++xp) {
          std::complex<double> acc = 0;
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
              if (left[b][c] == std::complex<double>(0)) continue;
              for (int bp = 0; bp < 2; ++bp)
                for (int cp = 0; cp < 2; ++cp)
                  acc += e(2 * c + cp, 2 * b + bp) * left[b][c] * s(2 * ap + bp, 2 * xp + cp);
            }
          out(a * dim_a + ap, x * dim_a + xp) = acc;
        }
    }
  return out;
}

Eigen::MatrixXcd flip_second(const Eigen::MatrixXcd& m, int dim_a) {
  Eigen::VectorXd sign(dim_a * dim_a);
  for (int a = 0; a < dim_a; ++a)
    for (int ap = 0; ap < dim_a; ++ap) sign(a * dim_a + ap) = ap % 2 ? -1.0 : 1.0;
  return sign.asDiagonal() * m * sign.asDiagonal();
}

ProtocolState finish(Eigen::MatrixXcd m, int dim_a, double p0) {
  const double p1 = m.trace().real();
  if (!(p1 >= kUnderflow)) throw ProbabilityError("final-stage success probability underflow");
  DensityMatrix rho({dim_a, dim_a}, m / p1);
  return {std::move(rho), p0, p1};
}

}  // namespace

int effective_cutoff(double chi, int cutoff, double eps) {
  return std::max(cutoff, fock::required_cutoff(chi, eps));
}

RelayState relay_state(double chi, Transmissivity eta1, const DetectorModel& det, int cutoff) {
  det.validate();
  const int n = effective_cutoff(chi, cutoff);
  if (n + 1 > fock::kMaxCutoff) throw TruncationError("relay_state: chi too large for the supported cutoff");
  const StateVector source = fock::tmsv(chi, n);
  const StateVector photon = fock::balanced_beamsplitter(fock::fock_state({1, 0}, 1), 0, 1);
  // modes: A, C, D, B, then environments E (of C) and F (of D)
  StateVector psi = fock::with_cutoff(fock::tensor(source, photon), n + 1);
  psi = fock::loss_channel(psi, kC, eta1);
  psi = fock::loss_channel(psi, kD, eta1);
  const std::array<int, 2> keep{kA, kB};
  const std::array<int, 2> dims{n + 1, 2};
  const auto plus = fock::threshold_measurement(psi, kC, kD, det, ClickPattern::SecondOnly);
  const auto minus = fock::threshold_measurement(psi, kC, kD, det, ClickPattern::FirstOnly);
  const DensityMatrix rp = fock::partial_trace(plus, keep, dims);
  const DensityMatrix rm = fock::phase_flip(fock::partial_trace(minus, keep, dims), 1);
  Eigen::MatrixXcd m = rp.matrix() + rm.matrix();
  const double p0 = m.trace().real();
  if (!(p0 >= kUnderflow)) throw ProbabilityError("relay success probability underflow");
  return {DensityMatrix({n + 1, 2}, m / p0), p0};
}

ProtocolState final_stage(const RelayState& side, Transmissivity eta_c, const DetectorModel& det,
                          ContractionPath path) {
  det.validate();
  const int dim_a = side.rho_ab.dims()[0];
  if (side.rho_ab.dims()[1] != 2) throw std::invalid_argument("final_stage: mode B must hold at most one photon");
  if (path == ContractionPath::Fast) {
    const auto& s = side.rho_ab.matrix();
    Eigen::MatrixXcd plus = contract(s, dim_a, effective_element(eta_c.value(), det, ClickPattern::SecondOnly));
    Eigen::MatrixXcd minus = contract(s, dim_a, effective_element(eta_c.value(), det, ClickPattern::FirstOnly));
    return finish(plus + flip_second(minus, dim_a), dim_a, side.p0);
  }
  const DensityMatrix lossy = fock::loss_channel(side.rho_ab, 1, eta_c);
  const DensityMatrix both = fock::tensor(lossy, lossy);  // A, B, A', B'
  const DensityMatrix plus = fock::threshold_measurement(both, 1, 3, det, ClickPattern::SecondOnly);
  const DensityMatrix minus =
      fock::phase_flip(fock::threshold_measurement(both, 1, 3, det, ClickPattern::FirstOnly), 1);
  return finish(plus.matrix() + minus.matrix(), dim_a, side.p0);
}

ProtocolState full_protocol_state(double chi, Transmissivity eta1, Transmissivity eta_c, const DetectorModel& det,
                                  int cutoff, ContractionPath path) {
  return final_stage(relay_state(chi, eta1, det, cutoff), eta_c, det, path);
}

double raw_key_bits(const DensityMatrix& rho_aa) {
  const std::array<int, 1> decoder{1};
  return std::max(fock::rci(rho_aa, decoder), 0.0);
}

DetectorModel detector_from(const ChannelParams& params) {
  return {params.eta_det, params.dark_click_prob()};
}

RateBreakdown numeric_skr(const RelayState& side, const PracticalGeometry& geometry, const ChannelParams& params) {
  const ProtocolState st = final_stage(side, geometry.eta_c, detector_from(params));
  return assemble_rate(RateMode::Numeric, st.p0, st.p1, geometry.m, raw_key_bits(st.rho), params.tau_s);
}

RateBreakdown numeric_skr(const PracticalGeometry& geometry, const ChannelParams& params, double chi, int cutoff) {
  params.validate();
  return numeric_skr(relay_state(chi, geometry.eta1, detector_from(params), cutoff), geometry, params);
}

SingleNodeState single_node_state(double chi, Transmissivity eta_arm, const DetectorModel& det, int cutoff) {
  det.validate();
  const int n = effective_cutoff(chi, cutoff);
  if (2 * n > fock::kMaxCutoff) throw TruncationError("single_node_state: chi too large for the supported cutoff");
  const StateVector source = fock::tmsv(chi, n);
  // modes: A, C, A', C', E, E'
  StateVector psi = fock::with_cutoff(fock::tensor(source, source), 2 * n);
  psi = fock::loss_channel(psi, 1, eta_arm);
  psi = fock::loss_channel(psi, 3, eta_arm);
  const std::array<int, 2> keep{0, 2};
  const std::array<int, 2> dims{n + 1, n + 1};
  const auto plus = fock::threshold_measurement(psi, 1, 3, det, ClickPattern::SecondOnly);
  const auto minus = fock::threshold_measurement(psi, 1, 3, det, ClickPattern::FirstOnly);
  Eigen::MatrixXcd m = fock::partial_trace(plus, keep, dims).matrix() +
                       fock::phase_flip(fock::partial_trace(minus, keep, dims), 1).matrix();
  const double p = m.trace().real();
  if (!(p >= kUnderflow)) throw ProbabilityError("single-node success probability underflow");
  return {DensityMatrix({n + 1, n + 1}, m / p), p};
}

SingleNodeRate single_node_skr(double total_km, const ChannelParams& params, double chi, int cutoff) {
  params.validate();
  const auto eta_arm = eta_from_distance(total_km / 2, params.alpha_db_per_km);
  const SingleNodeState st = single_node_state(chi, eta_arm, detector_from(params), cutoff);
  SingleNodeRate out;
  out.probability = st.probability;
  out.raw_rate_bits = raw_key_bits(st.rho);
  out.skr_bits_per_use = out.raw_rate_bits * st.probability;
  out.skr_bits_per_s = out.skr_bits_per_use / params.tau_s;
  return out;
}

}  // namespace ffqkd

#pragma once

#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>

namespace ffqkd {

/// Fraction of optical power that survives a channel, in [0, 1].
template <std::floating_point Scalar>
class TransmissivityT {
 public:
  constexpr TransmissivityT() = default;
  explicit TransmissivityT(Scalar eta) : eta_(eta) {
    if (!(eta >= Scalar(0) && eta <= Scalar(1)))
      throw std::domain_error("transmissivity must lie in [0, 1]");
  }

  Scalar value() const noexcept { return eta_; }
  explicit operator Scalar() const noexcept { return eta_; }

  friend TransmissivityT operator*(TransmissivityT a, TransmissivityT b) {
    return TransmissivityT(a.eta_ * b.eta_);
  }
  friend bool operator==(TransmissivityT, TransmissivityT) = default;

 private:
  Scalar eta_ = Scalar(1);
};

using Transmissivity = TransmissivityT<double>;

/// 10^(-alpha * length / 10); length in km, alpha in dB/km.
template <std::floating_point Scalar>
TransmissivityT<Scalar> eta_from_distance(Scalar length_km, Scalar alpha_db_per_km) {
  if (!std::isfinite(length_km) || !std::isfinite(alpha_db_per_km) || length_km < 0 ||
      alpha_db_per_km < 0)
    throw std::domain_error("eta_from_distance: length and attenuation must be finite and >= 0");
  return TransmissivityT<Scalar>(std::pow(Scalar(10), -alpha_db_per_km * length_km / Scalar(10)));
}

inline Transmissivity eta_from_distance(double length_km, double alpha_db_per_km) {
  return eta_from_distance<double>(length_km, alpha_db_per_km);
}

enum class LosslessPolicy { ReturnInfinity, Throw };

/// Secret-key capacity of a pure-loss chain with `repeaters` ideal, equally
/// spaced repeaters: -log2(1 - eta^(1/(repeaters+1))). repeaters = 0 is the
/// repeaterless bound.
template <std::floating_point Scalar>
Scalar skc_bound(TransmissivityT<Scalar> eta, int repeaters,
                 LosslessPolicy policy = LosslessPolicy::ReturnInfinity) {
  if (repeaters < 0) throw std::domain_error("skc_bound: repeater count must be >= 0");
  if (eta.value() == Scalar(1)) {
    if (policy == LosslessPolicy::Throw)
      throw std::domain_error("skc_bound: lossless channel has unbounded capacity");
    return std::numeric_limits<Scalar>::infinity();
  }
  const Scalar segment = std::pow(eta.value(), Scalar(1) / Scalar(repeaters + 1));
  return -std::log1p(-segment) / std::log(Scalar(2));
}

inline double skc_bound(Transmissivity eta, int repeaters,
                        LosslessPolicy policy = LosslessPolicy::ReturnInfinity) {
  return skc_bound<double>(eta, repeaters, policy);
}

}  // namespace ffqkd

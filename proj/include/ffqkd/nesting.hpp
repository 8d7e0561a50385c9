#pragma once

// Ideal dual-rail nested relay chains that use classical signalling faster
// than the quantum signal. Segment lengths are indexed from the ends of the
// chain inwards: d_1 is the outermost link, d_m the innermost.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "ffqkd/bounds.hpp"
#include "ffqkd/errors.hpp"

namespace ffqkd {

/// Nesting depth N, or the N -> infinity limit.
class NestingDepth {
 public:
  static constexpr NestingDepth finite(int levels) { return NestingDepth(levels); }
  static constexpr NestingDepth infinite() { return NestingDepth(-1); }

  constexpr bool is_infinite() const noexcept { return levels_ < 0; }
  constexpr int levels() const {
    if (is_infinite()) throw std::logic_error("NestingDepth: infinite depth has no level count");
    return levels_;
  }
  friend constexpr bool operator==(NestingDepth, NestingDepth) = default;

 private:
  constexpr explicit NestingDepth(int levels) : levels_(levels) {
    if (levels < -1) throw std::domain_error("NestingDepth: negative depth");
  }
  int levels_;
};

namespace detail {

// f this close to 1 makes g = 2/(1-f) blow up; treat it as infeasible.
inline constexpr double kMaxSpeedRatio = 1.0 - 1e-9;

template <std::floating_point Scalar>
void require_nesting_ratio(Scalar f) {
  if (!(f >= Scalar(0)))
    throw std::domain_error("speed ratio f = c_q/c_c must be >= 0");
  if (f > Scalar(kMaxSpeedRatio))
    throw InfeasibleError("nesting requires c_q < c_c (f < 1)", 1.0);
}

}  // namespace detail

/// f = c_q / c_c.
template <std::floating_point Scalar>
Scalar speed_ratio(Scalar c_quantum, Scalar c_classical) {
  if (!(c_quantum > 0 && c_classical > 0)) throw std::domain_error("speeds must be positive");
  return c_quantum / c_classical;
}

/// Characteristic root g = 2/(1-f) of the partial-sum recurrence.
template <std::floating_point Scalar>
Scalar characteristic_root(Scalar f) {
  detail::require_nesting_ratio(f);
  return Scalar(2) / (Scalar(1) - f);
}

/// Exponent s in K_N = eta^s / 2, from the closed form of the partial sums.
template <std::floating_point Scalar>
Scalar scaling_exponent(Scalar f, int depth) {
  if (depth < 0) throw std::domain_error("scaling_exponent: depth must be >= 0");
  const Scalar g = characteristic_root(f);
  const int m = depth + 1;
  if (m == 1) return Scalar(0.5);
  // Numerator and denominator divided through by g^m so large depths stay finite.
  const Scalar g_inv_m = std::pow(g, Scalar(-m));
  const Scalar num = (Scalar(1) - std::pow(g, Scalar(1 - m))) / (g - Scalar(1)) - Scalar(m - 1) * g_inv_m;
  const Scalar den = Scalar(1) - g_inv_m;
  return Scalar(0.5) - Scalar(0.5) * num / den;
}

/// Limit of scaling_exponent as depth -> infinity: f / (1 + f).
template <std::floating_point Scalar>
Scalar scaling_asymptote(Scalar f) {
  if (!(f >= 0 && f <= 1)) throw std::domain_error("scaling_asymptote: f must lie in [0, 1]");
  return f / (Scalar(1) + f);
}

template <std::floating_point Scalar>
Scalar scaling_exponent(Scalar f, NestingDepth depth) {
  if (depth.is_infinite()) {
    detail::require_nesting_ratio(f);
    return scaling_asymptote(f);
  }
  return scaling_exponent(f, depth.levels());
}

/// Tabulated rational functions of f for depths 1..5 (c_c = 1, c_q = f).
/// Independent of the closed form; used to cross-check it.
template <std::floating_point Scalar>
Scalar scaling_polynomial(Scalar f, int depth) {
  detail::require_nesting_ratio(f);
  const Scalar f2 = f * f, f3 = f2 * f, f4 = f3 * f, f5 = f4 * f;
  switch (depth) {
    case 1:
      return Scalar(-1) / (f - Scalar(3));
    case 2:
      return (-f2 + 2 * f + 3) / (2 * f2 - 8 * f + 14);
    case 3:
      return -(f3 - 4 * f2 + 5 * f + 2) / (f3 - 5 * f2 + 11 * f - 15);
    case 4:
      return (-3 * f4 + 16 * f3 - 34 * f2 + 32 * f + 5) / (2 * f4 - 12 * f3 + 32 * f2 - 52 * f + 62);
    case 5:
      return -(2 * f5 - 13 * f4 + 36 * f3 - 54 * f2 + 42 * f + 3) /
             (f5 - 7 * f4 + 22 * f3 - 42 * f2 + 57 * f - 63);
    default:
      throw std::out_of_range("scaling_polynomial: only depths 1..5 are tabulated");
  }
}

template <std::floating_point Scalar>
struct NestedSolutionT {
  int depth = 0;                       ///< N
  int segments = 1;                    ///< m = N + 1
  Scalar g = 0;                        ///< characteristic root 2/(1-f)
  Scalar total_km = 0;                 ///< L
  std::vector<Scalar> partial_sums;    ///< S_0..S_m, km
  std::vector<Scalar> segment_lengths; ///< d_1..d_m, km
  Scalar cost_km = 0;                  ///< E_N = sum d_k
  Scalar scaling = 0;                  ///< E_N / L

  /// Classical path length d_{c_k} = S_k + d_{k+1}, for k = 1..N.
  Scalar classical_length(int k) const {
    return partial_sums.at(static_cast<std::size_t>(k)) + segment_lengths.at(static_cast<std::size_t>(k));
  }
};

using NestedSolution = NestedSolutionT<double>;

/// Segment lengths of the depth-N chain over total length L (km) that make
/// every classical message arrive together with the quantum signal.
template <std::floating_point Scalar>
NestedSolutionT<Scalar> segment_lengths(Scalar f, int depth, Scalar total_km) {
  if (depth < 0) throw std::domain_error("segment_lengths: depth must be >= 0");
  if (!(total_km > 0)) throw std::domain_error("segment_lengths: total length must be > 0");
  NestedSolutionT<Scalar> sol;
  sol.depth = depth;
  sol.segments = depth + 1;
  sol.g = characteristic_root(f);
  sol.total_km = total_km;

  const int m = sol.segments;
  const Scalar half = total_km / 2;
  const Scalar g_inv_m = std::pow(sol.g, Scalar(-m));
  const Scalar den = Scalar(1) - g_inv_m;  // (g^m - 1) / g^m

  sol.partial_sums.resize(static_cast<std::size_t>(m) + 1);
  sol.partial_sums[0] = 0;
  for (int k = 1; k <= m; ++k)
    sol.partial_sums[static_cast<std::size_t>(k)] =
        k == m ? half : half * (std::pow(sol.g, Scalar(k - m)) - g_inv_m) / den;

  // d_k = S_k - 2 S_{k-1} = (L/2) (g^{k-1}(g-2) + 1) / (g^m - 1), free of cancellation.
  sol.segment_lengths.resize(static_cast<std::size_t>(m));
  for (int k = 1; k <= m; ++k) {
    const Scalar d = half * (std::pow(sol.g, Scalar(k - 1 - m)) * (sol.g - 2) + g_inv_m) / den;
    sol.segment_lengths[static_cast<std::size_t>(k - 1)] = d;
    sol.cost_km += d;
  }
  sol.scaling = sol.cost_km / total_km;
  return sol;
}

/// K_N = eta^{scaling_N} / 2 in bits per channel use.
template <std::floating_point Scalar>
Scalar ideal_rate(Scalar f, NestingDepth depth, Scalar total_km, Scalar alpha_db_per_km) {
  const Scalar eta = eta_from_distance(total_km, alpha_db_per_km).value();
  return Scalar(0.5) * std::pow(eta, scaling_exponent(f, depth));
}

/// Memory-assisted depth-1 chain: buffers of loss gamma * alpha placed
/// before the final measurement.
template <std::floating_point Scalar>
struct MemoryThresholdT {
  Scalar gamma = 0;       ///< alpha_QM / alpha
  Scalar gamma_star = 0;  ///< critical ratio above which buffering never helps
  Scalar e1_min = 0;      ///< minimum scaling cost, km
  Scalar s1 = 0;          ///< optimal buffer lengths, km
  Scalar s2 = 0;
  Scalar d1 = 0;          ///< optimal link lengths, km
  Scalar d2 = 0;
};

using MemoryThreshold = MemoryThresholdT<double>;

/// gamma* = f c_c / (c_QM (3 - f)).
template <std::floating_point Scalar>
Scalar critical_gamma(Scalar f, Scalar c_classical, Scalar c_memory) {
  if (!(f < 3)) throw std::domain_error("critical_gamma: requires f < 3");
  if (!(f > 0 && c_classical > 0 && c_memory > 0))
    throw std::domain_error("critical_gamma: speeds must be positive");
  return f * c_classical / (c_memory * (Scalar(3) - f));
}

template <std::floating_point Scalar>
MemoryThresholdT<Scalar> memory_threshold(Scalar gamma, Scalar f, Scalar c_classical, Scalar c_memory,
                                          Scalar total_km) {
  if (!(gamma >= 0)) throw std::domain_error("memory_threshold: gamma must be >= 0");
  if (!(total_km > 0)) throw std::domain_error("memory_threshold: total length must be > 0");
  MemoryThresholdT<Scalar> out;
  out.gamma = gamma;
  out.gamma_star = critical_gamma(f, c_classical, c_memory);
  if (gamma <= out.gamma_star) {
    // Relays sit at the quarter points and the far side buffers for the
    // whole classical round trip.
    const Scalar c_quantum = f * c_classical;
    out.d1 = total_km / 4;
    out.d2 = 0;
    out.s1 = 0;
    out.s2 = c_memory * out.d1 * (Scalar(1) / c_quantum + Scalar(1) / c_classical);
    out.e1_min = out.d1 + gamma * out.s2;
  } else {
    out.d1 = total_km * (Scalar(1) - f) / (Scalar(6) - 2 * f);
    out.d2 = total_km * (Scalar(1) + f) / (2 * (Scalar(3) - f));
    out.e1_min = total_km / (Scalar(3) - f);
  }
  return out;
}

template <std::floating_point Scalar>
Scalar e1_min(Scalar gamma, Scalar f, Scalar c_classical, Scalar c_memory, Scalar total_km) {
  return memory_threshold(gamma, f, c_classical, c_memory, total_km).e1_min;
}

}  // namespace ffqkd

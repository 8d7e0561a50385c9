#pragma once

// Rate maximisation over the free design parameters (d2, m, chi) and the
// figure-level products built on it: curves, crossovers, the optimal-d2 map.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffqkd/geometry.hpp"
#include "ffqkd/protocol.hpp"
#include "ffqkd/rates.hpp"
#include "ffqkd/sim.hpp"

namespace ffqkd {

struct SweepSpec {
  RateMode mode = RateMode::Analytic;

  /// Numeric mode: log-spaced chi candidates, then a golden refinement
  /// between the neighbours of the best one when refine_chi is set.
  std::vector<double> chi_grid = log_grid(0.01, 0.5, 12);
  bool refine_chi = true;
  /// Analytic mode evaluates the small-chi formula at this single value.
  double analytic_chi = 0.01;

  /// Empty means default_m_candidates().
  std::vector<std::int64_t> m_candidates;

  /// Coarse d2 grid size over [0, d2 upper bound]; 0 picks 64 (analytic) or 16 (numeric).
  int d2_points = 0;
  bool refine_d2 = true;
  double d2_rel_tol = 1e-3;  ///< golden-section tolerance as a fraction of L

  /// Restrict d2 to a fixed value (km). Clamped to the feasibility bound.
  std::optional<double> fixed_d2_km;
  /// Use d2 = d2 upper bound (no relay-side buffer).
  bool d2_at_bound = false;

  /// Numeric mode: exact evaluations per (chi, d2), taken in order of the
  /// analytic m surrogate.
  int m_exact = 6;
  int cutoff = kDefaultCutoff;

  static std::vector<double> log_grid(double lo, double hi, int points);
};

/// 0..200, then geometric steps of 5% to 1e12, plus every power of the base.
std::vector<std::int64_t> default_m_candidates(int base);

struct CurvePoint {
  double total_km = 0;
  double skr_bits_per_use = 0;
  double skr_bits_per_s = 0;
  double best_d2_km = 0;
  std::int64_t best_m = 0;
  double best_chi = 0;
  std::string curve_id;
  RateMode mode = RateMode::Analytic;
  RateBreakdown breakdown;
  bool feasible = true;
};

/// Argmax of the secret key rate over the spec. Ties go to smaller d2, then
/// smaller m, then smaller chi.
CurvePoint optimize_point(double total_km, const ChannelParams& params, const SweepSpec& spec);

/// Evaluates one design point in the spec's mode (the objective of optimize_point).
RateBreakdown evaluate_point(double total_km, double d2_km, std::int64_t m, double chi,
                             const ChannelParams& params, const SweepSpec& spec);

/// Single central relay reference with chi optimised over the same grid.
CurvePoint optimize_single_node(double total_km, const ChannelParams& params, const SweepSpec& spec);

/// Ideal nested chain K_N (or K_inf) in bits/use.
double ideal_curve_value(double total_km, double f, std::optional<int> depth, double alpha_db_per_km);

using RateCurve = std::function<double(double)>;

/// Distance where a - b changes sign, refined by bisection to `tol_km`.
/// The first bracketing pair of `grid` is used; none gives nullopt.
std::optional<double> crossover(const RateCurve& a, const RateCurve& b, std::span<const double> grid,
                                double tol_km = 0.05);

/// Same, for curves only known at the grid points (log-linear interpolation).
std::optional<double> crossover(std::span<const double> grid, std::span<const double> a,
                                std::span<const double> b);

struct HeatmapCell {
  double alpha_qm = 0;
  double total_km = 0;
  double d2_fraction = 0;  ///< optimal d2 / L
  std::int64_t m = 0;
  double skr_bits_per_use = 0;
  bool feasible = true;
};

struct Heatmap {
  std::vector<double> alpha_qm_grid;
  std::vector<double> total_km_grid;
  std::vector<HeatmapCell> cells;  ///< row-major: one row per L, alpha_qm varying fastest
  /// Per L: alpha_qm where the optimum leaves d2 = 0, bisected to 1e-4 dB/km.
  std::vector<std::optional<double>> contour;
  const HeatmapCell& at(std::size_t l, std::size_t a) const { return cells[l * alpha_qm_grid.size() + a]; }
};

/// d2/L below this counts as "node sends photon" (d2 -> 0).
inline constexpr double kD2ZeroFraction = 0.01;

/// Optimal d2/L over (alpha_qm, L); params.alpha_qm_db_per_km is overridden
/// per cell, everything else (switches, c_QM) is taken as given.
Heatmap heatmap_optimal_d2(std::span<const double> alpha_qm_grid, std::span<const double> total_km_grid,
                           const ChannelParams& params, const SweepSpec& spec = {});

/// alpha_qm at which the optimal d2 at distance L leaves zero, found by
/// bisection on [lo, hi]; nullopt when the regime does not flip.
std::optional<double> break_even_alpha_qm(double total_km, const ChannelParams& params, const SweepSpec& spec,
                                          double lo, double hi, double tol = 1e-4);

}  // namespace ffqkd

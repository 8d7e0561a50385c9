#include "ffqkd/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "ffqkd/errors.hpp"
#include "ffqkd/nesting.hpp"

namespace ffqkd {

namespace {

constexpr double kInvPhi = 0.6180339887498949;

struct Candidate {
  double value = -1;
  double d2 = 0;
  std::int64_t m = 0;
  double chi = 0;
  RateBreakdown rate;
};

// Strictly better, or equal within rounding and cheaper in (d2, m, chi).
bool better(const Candidate& a, const Candidate& b) {
  const double scale = std::max(std::abs(a.value), std::abs(b.value));
  if (a.value > b.value + 1e-12 * scale) return true;
  if (a.value < b.value - 1e-12 * scale) return false;
  return std::tie(a.d2, a.m, a.chi) < std::tie(b.d2, b.m, b.chi);
}

void keep_best(Candidate& best, const Candidate& c) {
  if (better(c, best)) best = c;
}

// Golden-section search for a maximum of f on [a, b]; returns the best probe.
template <class F>
Candidate golden(F&& f, double a, double b, double tol) {
  Candidate best;
  if (!(b - a > tol)) return best;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  Candidate fc = f(c), fd = f(d);
  keep_best(best, fc);
  keep_best(best, fd);
  while (b - a > tol) {
    if (fc.value >= fd.value) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
      keep_best(best, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
      keep_best(best, fd);
    }
  }
  return best;
}

std::vector<double> d2_grid(double total_km, const ChannelParams& params, const SweepSpec& spec) {
  const double bound = d2_upper_bound(total_km, params);
  if (spec.d2_at_bound) return {bound};
  if (spec.fixed_d2_km) {
    if (*spec.fixed_d2_km < 0) throw std::domain_error("fixed d2 must be >= 0");
    return {std::min(*spec.fixed_d2_km, bound)};
  }
  int n = spec.d2_points > 0 ? spec.d2_points : (spec.mode == RateMode::Analytic ? 64 : 16);
  n = std::max(n, 2);
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) grid[static_cast<std::size_t>(i)] = bound * i / (n - 1);
  return grid;
}

class Objective {
 public:
  Objective(double total_km, const ChannelParams& params, const SweepSpec& spec)
      : total_km_(total_km),
        params_(params),
        spec_(spec),
        det_(detector_from(params)),
        ms_(spec.m_candidates.empty() ? default_m_candidates(params.base_b) : spec.m_candidates) {
    if (!(total_km > 0)) throw std::domain_error("optimize: total length must be > 0");
    params.validate();
    for (auto m : ms_)
      if (m < 0) throw std::domain_error("optimize: m candidates must be >= 0");
    if (ms_.empty()) throw InfeasibleError("optimize: no m candidates");
    std::sort(ms_.begin(), ms_.end());
    ms_.erase(std::unique(ms_.begin(), ms_.end()), ms_.end());
  }

  // Best over m for fixed (d2, chi).
  Candidate at(double d2, double chi) const {
    const PracticalGeometry base = solve_geometry(total_km_, d2, params_, 0);
    return spec_.mode == RateMode::Analytic ? analytic(base, chi) : numeric(base, chi);
  }

 private:
  Candidate analytic(const PracticalGeometry& base, double chi) const {
    Candidate best;
    for (auto m : ms_) {
      const PracticalGeometry g = with_storage(base, params_, m);
      Candidate c{0, base.d2_km, m, chi, {}};
      try {
        c.rate = skr_small_chi(g, params_, chi);
        c.value = c.rate.skr_bits_per_use;
      } catch (const std::domain_error&) {
        c.value = 0;  // p0 = 0: nothing heralds
      }
      keep_best(best, c);
    }
    return best;
  }

  Candidate numeric(const PracticalGeometry& base, double chi) const {
    Candidate best{0, base.d2_km, ms_.front(), chi, {}};
    RelayState side = [&] {
      try {
        return relay_state(chi, base.eta1, det_, spec_.cutoff);
      } catch (const ProbabilityError&) {
        return RelayState{fock::DensityMatrix({1}, Eigen::MatrixXcd::Zero(1, 1)), 0.0};
      }
    }();
    if (side.p0 <= 0) return best;
    // rank m by the loss-versus-wait surrogate eta_c / z0, exact rates on the top few
    std::vector<std::pair<double, std::int64_t>> ranked;
    ranked.reserve(ms_.size());
    for (auto m : ms_) {
      const PracticalGeometry g = with_storage(base, params_, m);
      ranked.emplace_back(g.eta_c.value() / z0_mean_wait(side.p0, m), m);
    }
    const auto top = std::min<std::size_t>(static_cast<std::size_t>(std::max(spec_.m_exact, 1)), ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top), ranked.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t k = 0; k < top; ++k) {
      const PracticalGeometry g = with_storage(base, params_, ranked[k].second);
      Candidate c{0, base.d2_km, g.m, chi, {}};
      try {
        c.rate = numeric_skr(side, g, params_);
        c.value = c.rate.skr_bits_per_use;
      } catch (const ProbabilityError&) {
        c.value = 0;
      }
      keep_best(best, c);
    }
    return best;
  }

  double total_km_;
  ChannelParams params_;
  SweepSpec spec_;
  fock::DetectorModel det_;
  std::vector<std::int64_t> ms_;
};

CurvePoint to_point(double total_km, const Candidate& c, RateMode mode) {
  CurvePoint p;
  p.total_km = total_km;
  p.mode = mode;
  p.best_d2_km = c.d2;
  p.best_m = c.m;
  p.best_chi = c.chi;
  p.breakdown = c.rate;
  p.skr_bits_per_use = std::max(c.value, 0.0);
  p.skr_bits_per_s = c.rate.skr_bits_per_s;
  return p;
}

}  // namespace

std::vector<double> SweepSpec::log_grid(double lo, double hi, int points) {
  if (!(lo > 0 && hi >= lo) || points < 1) throw std::domain_error("log_grid: need 0 < lo <= hi and points >= 1");
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    out[static_cast<std::size_t>(i)] = points == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
  return out;
}

std::vector<std::int64_t> default_m_candidates(int base) {
  std::vector<std::int64_t> ms(201);
  std::iota(ms.begin(), ms.end(), 0);
  for (double x = 200; x < 1e12; x *= 1.05) ms.push_back(static_cast<std::int64_t>(std::llround(x)));
  for (std::int64_t p = base; p < 1'000'000'000'000; p *= base) ms.push_back(p);
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  return ms;
}

RateBreakdown evaluate_point(double total_km, double d2_km, std::int64_t m, double chi, const ChannelParams& params,
                             const SweepSpec& spec) {
  const PracticalGeometry g = solve_geometry(total_km, d2_km, params, m);
  if (spec.mode == RateMode::Analytic) return skr_small_chi(g, params, chi);
  return numeric_skr(g, params, chi, spec.cutoff);
}

CurvePoint optimize_point(double total_km, const ChannelParams& params, const SweepSpec& spec) {
  const Objective objective(total_km, params, spec);
  const auto d2s = d2_grid(total_km, params, spec);
  const double tol = spec.d2_rel_tol * total_km;

  std::vector<double> chis;
  if (spec.mode == RateMode::Analytic) {
    chis = {spec.analytic_chi};
  } else {
    chis = spec.chi_grid;
    std::sort(chis.begin(), chis.end());
    if (chis.empty()) throw InfeasibleError("optimize: empty chi grid");
    for (double c : chis)
      if (!(c > 0 && c < 1)) throw std::domain_error("optimize: chi candidates must lie in (0, 1)");
  }

  Candidate best;
  std::size_t bi = 0, bj = 0;
  for (std::size_t i = 0; i < chis.size(); ++i)
    for (std::size_t j = 0; j < d2s.size(); ++j) {
      const Candidate c = objective.at(d2s[j], chis[i]);
      if (better(c, best)) {
        best = c;
        bi = i;
        bj = j;
      }
    }

  const bool grid_d2 = d2s.size() > 1 && spec.refine_d2;
  const double d2_lo = grid_d2 ? d2s[bj == 0 ? 0 : bj - 1] : 0;
  const double d2_hi = grid_d2 ? d2s[std::min(bj + 1, d2s.size() - 1)] : 0;
  auto refine_d2 = [&](double chi) {
    Candidate c = golden([&](double d2) { return objective.at(d2, chi); }, d2_lo, d2_hi, tol);
    return c;
  };
  if (best.value > 0 && grid_d2) keep_best(best, refine_d2(chis[bi]));

  if (best.value > 0 && spec.mode == RateMode::Numeric && spec.refine_chi && chis.size() > 1) {
    const double lo = std::log(chis[bi == 0 ? 0 : bi - 1]);
    const double hi = std::log(chis[std::min(bi + 1, chis.size() - 1)]);
    const double fixed_d2 = best.d2;
    auto at_chi = [&](double log_chi) {
      const double chi = std::exp(log_chi);
      Candidate c = objective.at(fixed_d2, chi);
      if (grid_d2) keep_best(c, refine_d2(chi));
      return c;
    };
    keep_best(best, golden(at_chi, lo, hi, 1e-3));
  }
  if (best.value < 0) best = objective.at(d2s.front(), chis.front());
  return to_point(total_km, best, spec.mode);
}

CurvePoint optimize_single_node(double total_km, const ChannelParams& params, const SweepSpec& spec) {
  if (!(total_km > 0)) throw std::domain_error("optimize_single_node: total length must be > 0");
  params.validate();
  auto eval = [&](double chi) {
    Candidate c{0, 0, 0, chi, {}};
    c.rate.mode = spec.mode;
    if (spec.mode == RateMode::Analytic) {
      const auto eta = eta_from_distance(total_km, params.alpha_db_per_km);
      c.rate.p1 = single_node_small_chi(eta, chi);
      c.rate.raw_rate_bits = 1;
    } else {
      try {
        const SingleNodeRate r = single_node_skr(total_km, params, chi, spec.cutoff);
        c.rate.p1 = r.probability;
        c.rate.raw_rate_bits = r.raw_rate_bits;
      } catch (const ProbabilityError&) {
      }
    }
    c.rate.z1 = c.rate.p1 > 0 ? 1 / c.rate.p1 : 0;
    c.rate.repeater_rate = c.rate.p1;
    c.value = c.rate.raw_rate_bits * c.rate.p1;
    c.rate.skr_bits_per_use = c.value;
    c.rate.skr_bits_per_s = c.value / params.tau_s;
    return c;
  };
  if (spec.mode == RateMode::Analytic) return to_point(total_km, eval(spec.analytic_chi), spec.mode);
  std::vector<double> chis = spec.chi_grid;
  std::sort(chis.begin(), chis.end());
  if (chis.empty()) throw InfeasibleError("optimize_single_node: empty chi grid");
  Candidate best;
  std::size_t bi = 0;
  for (std::size_t i = 0; i < chis.size(); ++i) {
    const Candidate c = eval(chis[i]);
    if (better(c, best)) {
      best = c;
      bi = i;
    }
  }
  if (best.value > 0 && spec.refine_chi && chis.size() > 1) {
    const double lo = std::log(chis[bi == 0 ? 0 : bi - 1]);
    const double hi = std::log(chis[std::min(bi + 1, chis.size() - 1)]);
    keep_best(best, golden([&](double x) { return eval(std::exp(x)); }, lo, hi, 1e-3));
  }
  return to_point(total_km, best, spec.mode);
}

double ideal_curve_value(double total_km, double f, std::optional<int> depth, double alpha_db_per_km) {
  const NestingDepth n = depth ? NestingDepth::finite(*depth) : NestingDepth::infinite();
  return ideal_rate(f, n, total_km, alpha_db_per_km);
}

std::optional<double> crossover(const RateCurve& a, const RateCurve& b, std::span<const double> grid,
                                double tol_km) {
  if (grid.size() < 2) return std::nullopt;
  auto diff = [&](double x) { return a(x) - b(x); };
  std::optional<std::pair<double, double>> last;  // (x, diff) of the last nonzero sample
  for (double x : grid) {
    const double d = diff(x);
    if (d == 0) continue;
    if (last && (last->second < 0) != (d < 0)) {
      double lo = last->first, hi = x, dlo = last->second;
      while (hi - lo > tol_km) {
        const double mid = 0.5 * (lo + hi);
        const double dm = diff(mid);
        if (dm == 0) return mid;
        if ((dm < 0) == (dlo < 0)) {
          lo = mid;
          dlo = dm;
        } else {
          hi = mid;
        }
      }
      return 0.5 * (lo + hi);
    }
    last = {x, d};
  }
  return std::nullopt;
}

std::optional<double> crossover(std::span<const double> grid, std::span<const double> a, std::span<const double> b) {
  if (grid.size() != a.size() || grid.size() != b.size())
    throw std::invalid_argument("crossover: curves must be sampled on the grid");
  auto key = [](double u, double v) {
    return (u > 0 && v > 0) ? std::log(u) - std::log(v) : u - v;
  };
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = key(a[i], b[i]);
    if (d == 0) continue;
    if (last) {
      const double dl = key(a[*last], b[*last]);
      if ((dl < 0) != (d < 0)) {
        const double t = dl / (dl - d);
        return grid[*last] + t * (grid[i] - grid[*last]);
      }
    }
    last = i;
  }
  return std::nullopt;
}

std::optional<double> break_even_alpha_qm(double total_km, const ChannelParams& params, const SweepSpec& spec,
                                          double lo, double hi, double tol) {
  auto positive = [&](double alpha_qm) {
    ChannelParams p = params;
    p.alpha_qm_db_per_km = alpha_qm;
    return optimize_point(total_km, p, spec).best_d2_km / total_km > kD2ZeroFraction;
  };
  const bool plo = positive(lo), phi = positive(hi);
  if (plo == phi) return std::nullopt;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (positive(mid) == plo ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Heatmap heatmap_optimal_d2(std::span<const double> alpha_qm_grid, std::span<const double> total_km_grid,
                           const ChannelParams& params, const SweepSpec& spec) {
  if (alpha_qm_grid.empty() || total_km_grid.empty()) throw std::invalid_argument("heatmap: grids must be nonempty");
  Heatmap out;
  out.alpha_qm_grid.assign(alpha_qm_grid.begin(), alpha_qm_grid.end());
  out.total_km_grid.assign(total_km_grid.begin(), total_km_grid.end());
  const std::size_t na = alpha_qm_grid.size(), nl = total_km_grid.size();
  out.cells.resize(na * nl);
  parallel_for(static_cast<int>(na * nl), [&](int k) {
    const std::size_t l = static_cast<std::size_t>(k) / na, a = static_cast<std::size_t>(k) % na;
    HeatmapCell& cell = out.cells[static_cast<std::size_t>(k)];
    cell.alpha_qm = alpha_qm_grid[a];
    cell.total_km = total_km_grid[l];
    try {
      ChannelParams p = params;
      p.alpha_qm_db_per_km = cell.alpha_qm;
      const CurvePoint pt = optimize_point(cell.total_km, p, spec);
      cell.d2_fraction = pt.best_d2_km / cell.total_km;
      cell.m = pt.best_m;
      cell.skr_bits_per_use = pt.skr_bits_per_use;
    } catch (const std::exception&) {
      cell.feasible = false;
    }
  });
  out.contour.assign(nl, std::nullopt);
  parallel_for(static_cast<int>(nl), [&](int li) {
    const auto l = static_cast<std::size_t>(li);
    for (std::size_t a = 0; a + 1 < na; ++a) {
      const HeatmapCell &c0 = out.at(l, a), &c1 = out.at(l, a + 1);
      if (!c0.feasible || !c1.feasible) continue;
      const bool z0 = c0.d2_fraction <= kD2ZeroFraction, z1 = c1.d2_fraction <= kD2ZeroFraction;
      if (z0 && !z1) {
        out.contour[l] = break_even_alpha_qm(c0.total_km, params, spec, c0.alpha_qm, c1.alpha_qm);
        break;
      }
    }
  });
  return out;
}

}  // namespace ffqkd

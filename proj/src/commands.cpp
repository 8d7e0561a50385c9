#include "ffqkd/commands.hpp"

#include <array>
#include <cmath>
#include <string>

#include "ffqkd/bounds.hpp"
#include "ffqkd/nesting.hpp"
#include "ffqkd/optimize.hpp"
#include "ffqkd/rates.hpp"
#include "ffqkd/sim.hpp"
#include "ffqkd/storage.hpp"

namespace ffqkd::cli {

namespace {

std::string km_or_none(const std::optional<double>& x) {
  return x ? format_value(*x) : std::string("none");
}

std::string depth_label(const std::optional<int>& d) {
  return d ? std::to_string(*d) : std::string("inf");
}

double skc(double total_km, int repeaters, double alpha) {
  return skc_bound(eta_from_distance(total_km, alpha), repeaters);
}

Cell flag(bool b) { return std::string(b ? "true" : "false"); }

}  // namespace

std::optional<double> refined_crossover(std::span<const double> grid, std::span<const double> a,
                                        std::span<const double> b, const RateCurve& fa, const RateCurve& fb) {
  const auto coarse = crossover(grid, a, b);
  if (!coarse) return std::nullopt;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (grid[i] <= *coarse && *coarse <= grid[i + 1]) {
      const std::array<double, 2> bracket{grid[i], grid[i + 1]};
      if (auto fine = crossover(fa, fb, bracket, 0.05)) return fine;
      break;
    }
  return coarse;
}

Table cmd_bounds(const RunConfig& config) {
  config.validate();
  const auto grid = config.distance_grid();
  const double alpha = config.channel.alpha_db_per_km;
  Table t;
  t.command = "bounds";
  t.columns = {"L_km", "eta"};
  for (int n : config.repeaters) t.columns.push_back("skc_" + std::to_string(n));
  for (double L : grid) {
    std::vector<Cell> row{L, eta_from_distance(L, alpha).value()};
    for (int n : config.repeaters) row.emplace_back(skc(L, n, alpha));
    t.add_row(std::move(row));
  }
  return t;
}

Table cmd_ideal(const RunConfig& config) {
  config.validate();
  const auto grid = config.distance_grid();
  const double alpha = config.channel.alpha_db_per_km;
  const double f = config.effective_f();
  Table t;
  t.command = "ideal";
  t.columns = {"L_km"};
  for (const auto& d : config.depths) t.columns.push_back("K_" + depth_label(d));
  for (int n : config.repeaters) t.columns.push_back("skc_" + std::to_string(n));

  std::vector<std::vector<double>> k(config.depths.size()), s(config.repeaters.size());
  for (double L : grid) {
    std::vector<Cell> row{L};
    for (std::size_t i = 0; i < config.depths.size(); ++i) {
      k[i].push_back(ideal_curve_value(L, f, config.depths[i], alpha));
      row.emplace_back(k[i].back());
    }
    for (std::size_t j = 0; j < config.repeaters.size(); ++j) {
      s[j].push_back(skc(L, config.repeaters[j], alpha));
      row.emplace_back(s[j].back());
    }
    t.add_row(std::move(row));
  }
  for (std::size_t i = 0; i < config.depths.size(); ++i) {
    t.annotations.emplace_back("scaling_exponent_" + depth_label(config.depths[i]),
                               format_value(config.depths[i] ? scaling_exponent(f, *config.depths[i])
                                                             : scaling_asymptote(f)));
    for (std::size_t j = 0; j < config.repeaters.size(); ++j) {
      const auto depth = config.depths[i];
      const int n = config.repeaters[j];
      const auto x = refined_crossover(
          grid, k[i], s[j], [&](double L) { return ideal_curve_value(L, f, depth, alpha); },
          [&](double L) { return skc(L, n, alpha); });
      t.annotations.emplace_back("crossover_K_" + depth_label(depth) + "_skc_" + std::to_string(n) + "_km",
                                 km_or_none(x));
    }
  }
  return t;
}

Table cmd_practical(const RunConfig& config) {
  config.validate();
  const auto grid = config.distance_grid();
  const ChannelParams params = config.effective_channel();
  const SweepSpec spec = config.effective_spec();
  const std::size_t n = grid.size();
  std::vector<CurvePoint> multi(n), single(n);
  std::vector<bool> ok(n, true);
  parallel_for(static_cast<int>(n), [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      multi[k] = optimize_point(grid[k], params, spec);
    } catch (const std::exception&) {
      ok[k] = false;
    }
    if (config.single_node) {
      try {
        single[k] = optimize_single_node(grid[k], params, spec);
      } catch (const std::exception&) {
      }
    }
  });

  Table t;
  t.command = "practical";
  t.columns = {"L_km", "mode", "skr_bits_per_use", "skr_bits_per_s", "best_d2_km", "best_m", "best_chi",
               "p0", "p1", "raw_rate_bits", "feasible"};
  if (config.single_node) t.columns.insert(t.columns.end(), {"single_node_bits_per_use", "single_node_chi"});
  for (int r : config.repeaters) t.columns.push_back("skc_" + std::to_string(r));

  std::vector<double> a(n), sn(n);
  std::vector<std::vector<double>> bounds(config.repeaters.size(), std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const CurvePoint& p = multi[k];
    a[k] = ok[k] ? p.skr_bits_per_use : 0.0;
    std::vector<Cell> row{grid[k], std::string(to_string(spec.mode)), a[k], ok[k] ? p.skr_bits_per_s : 0.0,
                          p.best_d2_km, static_cast<std::int64_t>(p.best_m), p.best_chi,
                          p.breakdown.p0, p.breakdown.p1, p.breakdown.raw_rate_bits, flag(ok[k])};
    if (config.single_node) {
      sn[k] = single[k].skr_bits_per_use;
      row.emplace_back(sn[k]);
      row.emplace_back(single[k].best_chi);
    }
    for (std::size_t j = 0; j < config.repeaters.size(); ++j) {
      bounds[j][k] = skc(grid[k], config.repeaters[j], params.alpha_db_per_km);
      row.emplace_back(bounds[j][k]);
    }
    t.add_row(std::move(row));
  }

  const RateCurve multi_curve = [&](double L) { return optimize_point(L, params, spec).skr_bits_per_use; };
  if (config.single_node) {
    const RateCurve single_curve = [&](double L) { return optimize_single_node(L, params, spec).skr_bits_per_use; };
    t.annotations.emplace_back("crossover_single_node_km",
                               km_or_none(refined_crossover(grid, a, sn, multi_curve, single_curve)));
  }
  for (std::size_t j = 0; j < config.repeaters.size(); ++j) {
    const int r = config.repeaters[j];
    const RateCurve bound = [&](double L) { return skc(L, r, params.alpha_db_per_km); };
    t.annotations.emplace_back("crossover_skc_" + std::to_string(r) + "_km",
                               km_or_none(refined_crossover(grid, a, bounds[j], multi_curve, bound)));
  }
  double reach = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (a[k] > 0) reach = grid[k];
  t.annotations.emplace_back("max_positive_km", format_value(reach));
  return t;
}

Table cmd_heatmap(const RunConfig& config) {
  config.validate();
  const auto ls = config.distance_grid();
  const auto as = config.alpha_qm_grid();
  const Heatmap map = heatmap_optimal_d2(as, ls, config.effective_channel(), config.effective_spec());
  Table t;
  t.command = "heatmap";
  t.columns = {"L_km", "alpha_qm_db_per_km", "d2_over_L", "best_m", "skr_bits_per_use", "feasible"};
  for (std::size_t l = 0; l < ls.size(); ++l)
    for (std::size_t a = 0; a < as.size(); ++a) {
      const HeatmapCell& c = map.at(l, a);
      t.add_row({c.total_km, c.alpha_qm, c.d2_fraction, static_cast<std::int64_t>(c.m), c.skr_bits_per_use,
                 flag(c.feasible)});
    }
  for (std::size_t l = 0; l < ls.size(); ++l)
    t.annotations.emplace_back("break_even_alpha_qm_at_" + format_value(ls[l]) + "_km", km_or_none(map.contour[l]));
  return t;
}

Table cmd_sim(const RunConfig& config) {
  config.validate();
  SimConfig sc;
  sc.p0 = config.p0;
  sc.p1 = config.p1;
  sc.m = config.m;
  sc.trials = config.trials;
  sc.seed = config.seed;
  sc.histogram_bins = config.bins;
  sc.streams = config.streams;
  const SimStats s = simulate_heralding(sc);
  const double z0 = z0_mean_wait(config.p0, config.m);
  Table t;
  t.command = "sim";
  t.columns = {"histogram", "bin_lo", "bin_hi", "mass"};
  for (std::size_t i = 0; i < s.wait.mass.size(); ++i)
    t.add_row({std::string("wait"), s.wait.bin_lo[i], s.wait.bin_hi[i], s.wait.mass[i]});
  for (std::size_t i = 0; i < s.storage.mass.size(); ++i)
    t.add_row({std::string("storage"), s.storage.bin_lo[i], s.storage.bin_hi[i], s.storage.mass[i]});
  t.annotations = {
      {"generator", s.generator},
      {"seed", std::to_string(s.seed)},
      {"successes", std::to_string(s.successes)},
      {"mean_wait_slots", format_value(s.mean_wait_slots)},
      {"stderr_slots", format_value(s.stderr_slots)},
      {"analytic_wait_slots", format_value(z0 / config.p1)},
      {"mean_storage_slots", format_value(s.mean_storage_slots)},
      {"analytic_storage_slots", format_value(mean_buffer_wait_slots(config.p0, config.m))},
      {"empirical_rate", format_value(s.empirical_rate)},
      {"analytic_rate", format_value(config.p1 / z0)},
      {"horizon_slots", std::to_string(s.horizon_slots)},
  };
  return t;
}

Table cmd_thresholds(const RunConfig& config) {
  config.validate();
  const double f = config.effective_f();
  const ChannelParams p = config.effective_channel();
  // the dual-rail analysis stores at the classical signal speed unless told otherwise
  const double c_c = p.c_c;
  const double c_qm = config.c_qm_auto ? c_c : p.c_qm;
  const double gamma_star = critical_gamma(f, c_c, c_qm);
  Table t;
  t.command = "thresholds";
  t.columns = {"gamma", "alpha_qm_db_per_km", "e1_min_over_L", "d1_over_L", "d2_over_L", "buffered"};
  for (double g : config.gamma_grid()) {
    const MemoryThreshold m = memory_threshold(g, f, c_c, c_qm, 1.0);
    t.add_row({g, g * p.alpha_db_per_km, m.e1_min, m.d1, m.d2, flag(g <= gamma_star)});
  }
  t.annotations = {{"f", format_value(f)},
                   {"gamma_star", format_value(gamma_star)},
                   {"alpha_qm_critical_db_per_km", format_value(gamma_star * p.alpha_db_per_km)}};
  return t;
}

Table cmd_storage(const RunConfig& config) {
  config.validate();
  const auto ls = config.distance_grid();
  const auto as = config.alpha_qm_grid();
  const StorageMap map =
      storage_time_map(config.storage_config, as, ls, config.effective_channel(), config.seed, config.trials);
  Table t;
  t.command = "storage";
  t.columns = {"L_km", "alpha_qm_db_per_km", "config", "d2_km", "m", "p0", "t_qm1_s", "t_qm2_s",
               "total_storage_s", "mean_buffer_wait_s", "simulated_buffer_wait_s", "skr_bits_per_use", "feasible"};
  for (const StorageCell& c : map.cells)
    t.add_row({c.total_km, c.alpha_qm, std::string(to_string(map.config)), c.d2_km, static_cast<std::int64_t>(c.m),
               c.p0, c.t_qm1_s, c.t_qm2_s, c.total_storage_s, c.mean_buffer_wait_s,
               c.simulated_buffer_wait_s < 0 ? std::nan("") : c.simulated_buffer_wait_s, c.skr_bits_per_use,
               flag(c.feasible)});
  return t;
}

}  // namespace ffqkd::cli

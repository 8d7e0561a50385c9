#include "ffqkd/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ffqkd/errors.hpp"

namespace ffqkd {

ChannelParams ChannelParams::figure_defaults(double alpha_qm_db_per_km) {
  ChannelParams p;
  p.alpha_qm_db_per_km = alpha_qm_db_per_km;
  p.c_qm = alpha_qm_db_per_km == 0.2 ? p.c_q : kSpeedOfLightKmPerS;
  return p;
}

void ChannelParams::validate() const {
  auto require = [](bool ok, const char* field) {
    if (!ok) throw std::domain_error(std::string("ChannelParams: ") + field + " out of range");
  };
  require(std::isfinite(alpha_db_per_km) && alpha_db_per_km >= 0, "alpha_db_per_km");
  require(std::isfinite(alpha_qm_db_per_km) && alpha_qm_db_per_km >= 0, "alpha_qm_db_per_km");
  require(std::isfinite(c_q) && c_q > 0, "c_q");
  require(std::isfinite(c_c) && c_c > 0, "c_c");
  require(std::isfinite(c_qm) && c_qm > 0, "c_qm");
  require(std::isfinite(tau_s) && tau_s > 0, "tau_s");
  require(eta_switch > 0 && eta_switch <= 1, "eta_switch");
  require(eta_det > 0 && eta_det <= 1, "eta_det");
  require(std::isfinite(dark_rate_hz) && dark_rate_hz >= 0, "dark_rate_hz");
  require(dark_click_prob() < 1, "dark_rate_hz * tau_s");
  require(base_b >= 2, "base_b");
}

double d2_upper_bound(double total_km, const ChannelParams& params) {
  const double half = total_km / 2;
  const double den = 6 * params.c_c - 2 * params.c_q;
  if (den <= 0) return half;
  return std::min(half, total_km * (params.c_c + params.c_q) / den);
}

int switch_count(std::int64_t m, int base) {
  if (base < 2) throw std::domain_error("switch_count: base must be >= 2");
  if (m < 0) throw std::domain_error("switch_count: m must be >= 0");
  if (m <= 1) return 1;
  // smallest digits with base^digits >= m
  int digits = 0;
  std::int64_t reach = 1;
  while (reach < m) {
    ++digits;
    if (reach > m / base) break;
    reach *= base;
  }
  return base * digits + 1;
}

PracticalGeometry solve_geometry(double total_km, double d2_km, const ChannelParams& params, std::int64_t m) {
  params.validate();
  if (!(total_km > 0)) throw std::domain_error("solve_geometry: total length must be > 0");
  if (!(d2_km >= 0)) throw std::domain_error("solve_geometry: d2 must be >= 0");
  if (m < 0) throw std::domain_error("solve_geometry: m must be >= 0");
  const double bound = d2_upper_bound(total_km, params);
  if (d2_km > bound * (1 + 1e-12))
    throw InfeasibleError("solve_geometry: d2 = " + std::to_string(d2_km) +
                              " km exceeds the feasibility bound " + std::to_string(bound) + " km",
                          bound);

  PracticalGeometry g;
  g.total_km = total_km;
  g.d2_km = std::min(d2_km, bound);
  g.d1_km = std::max(total_km / 4 - g.d2_km / 2, 0.0);

  g.t1_s = g.d1_km / params.c_q;
  g.t2_s = g.d2_km / params.c_q;
  g.t_c_s = (g.d1_km + g.d2_km) / params.c_c;
  g.t_qm1_s = std::max(g.t1_s + g.t_c_s - g.t2_s, 0.0);
  g.d_qm1_km = params.c_qm * g.t_qm1_s;

  g.eta1 = eta_from_distance(g.d1_km, params.alpha_db_per_km);
  g.eta2 = eta_from_distance(g.d2_km, params.alpha_db_per_km);
  g.eta_qm1 = eta_from_distance(g.d_qm1_km, params.alpha_qm_db_per_km);
  return with_storage(g, params, m);
}

PracticalGeometry with_storage(PracticalGeometry g, const ChannelParams& params, std::int64_t m) {
  if (m < 0) throw std::domain_error("with_storage: m must be >= 0");
  g.m = m;
  g.t_qm2_s = static_cast<double>(m) * params.tau_s;
  g.d_qm2_km = params.c_qm * g.t_qm2_s;
  g.switch_uses = switch_count(m, params.base_b);
  g.eta_qm2 = eta_from_distance(g.d_qm2_km, params.alpha_qm_db_per_km);
  g.eta_c = g.eta2 * buffer_transmissivity(g, params);
  return g;
}

Transmissivity buffer_transmissivity(const PracticalGeometry& geometry, const ChannelParams& params) {
  const double switches = std::pow(params.eta_switch, geometry.switch_uses);
  return geometry.eta_qm1 * geometry.eta_qm2 * Transmissivity(switches);
}

}  // namespace ffqkd

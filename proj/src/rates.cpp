#include "ffqkd/rates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ffqkd/errors.hpp"

namespace ffqkd {

namespace {

// q^{m+1} - 1 without cancellation when p0 is small.
double survival_minus_one(double p0, std::int64_t m) {
  if (p0 >= 1) return -1.0;
  return std::expm1(static_cast<double>(m + 1) * std::log1p(-p0));
}

}  // namespace

std::string_view to_string(RateMode mode) noexcept {
  return mode == RateMode::Analytic ? "analytic" : "numeric";
}

double p0_small_chi(Transmissivity eta1, double kappa0) {
  return kappa0 * eta1.value() / 2;
}

double p1_small_chi(double chi, Transmissivity eta_c) {
  if (!(chi > 0 && chi < 1)) throw std::domain_error("p1_small_chi: chi must lie in (0, 1)");
  const double p1 = 2 * chi * chi * eta_c.value();
  if (p1 > 1) throw ProbabilityError("p1_small_chi: 2 chi^2 eta_c > 1, chi too large for the small-chi form");
  return p1;
}

double z0_mean_wait(double p0, std::int64_t m) {
  if (m < 0) throw std::domain_error("z0_mean_wait: m must be >= 0");
  if (!(p0 <= 1)) throw std::domain_error("z0_mean_wait: p0 must be <= 1");
  if (!(p0 > 0)) throw std::domain_error("z0_mean_wait: p0 = 0 never heralds (infinite wait)");
  const double s = survival_minus_one(p0, m);
  // 1 + 2q - 2q^{m+1} = 1 - 2 p0 - 2 s ;  1 + q - 2q^{m+1} = -p0 - 2 s
  const double num = 1 - 2 * p0 - 2 * s;
  const double den = -p0 - 2 * s;
  return num / (p0 * den);
}

double skr_small_chi_closed_form(double eta1, double eta_c, double chi, std::int64_t m, double tau_s,
                                 double kappa0) {
  if (!(tau_s > 0)) throw std::domain_error("skr_small_chi_closed_form: tau must be > 0");
  if (m < 0) throw std::domain_error("skr_small_chi_closed_form: m must be >= 0");
  const double p0 = kappa0 * eta1 / 2;
  if (p0 == 0) return 0.0;
  const double s = survival_minus_one(p0, m);
  // (eta1/2 + 2 q^{m+1} - 2) / (eta1 + 2 q^{m+1} - 3), with kappa0 folded into p0
  const double frac = (p0 + 2 * s) / (2 * p0 + 2 * s - 1);
  return chi * chi * (2 * p0) * eta_c * frac / tau_s;
}

RateBreakdown assemble_rate(RateMode mode, double p0, double p1, std::int64_t m, double raw_rate_bits,
                            double tau_s) {
  RateBreakdown out;
  out.mode = mode;
  out.p0 = p0;
  out.p1 = p1;
  out.q = 1 - p0;
  out.raw_rate_bits = raw_rate_bits;
  if (p0 <= 0 || p1 <= 0) {
    out.z0 = p0 > 0 ? z0_mean_wait(p0, m) : std::numeric_limits<double>::infinity();
    out.z1 = std::numeric_limits<double>::infinity();
    return out;
  }
  out.z0 = z0_mean_wait(p0, m);
  out.z1 = 1 / p1;
  out.repeater_rate = 1 / (out.z0 * out.z1);
  out.skr_bits_per_use = raw_rate_bits * out.repeater_rate;
  out.skr_bits_per_s = out.skr_bits_per_use / tau_s;
  return out;
}

RateBreakdown skr_small_chi(const PracticalGeometry& geometry, const ChannelParams& params, double chi,
                            double kappa0) {
  const double p0 = p0_small_chi(geometry.eta1, kappa0);
  const double p1 = p1_small_chi(chi, geometry.eta_c);
  RateBreakdown out = assemble_rate(RateMode::Analytic, p0, p1, geometry.m, 1.0, params.tau_s);
  out.skr_bits_per_s = skr_small_chi_closed_form(geometry.eta1.value(), geometry.eta_c.value(), chi,
                                                 geometry.m, params.tau_s, kappa0);
  out.skr_bits_per_use = out.skr_bits_per_s * params.tau_s;
  return out;
}

double single_node_small_chi(Transmissivity eta_total, double chi) {
  return 2 * chi * chi * std::sqrt(eta_total.value());
}

}  // namespace ffqkd

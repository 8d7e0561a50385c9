#include <cmath>
#include <random>

#include "doctest.h"
#include "ffqkd/errors.hpp"
#include "ffqkd/geometry.hpp"

using namespace ffqkd;

TEST_CASE("channel defaults") {
  const ChannelParams p;
  CHECK(p.c_q == doctest::Approx(2.0 / 3.0 * 299792.458));
  CHECK(p.c_c == doctest::Approx(0.9997 * 299792.458));
  CHECK(p.dark_click_prob() == doctest::Approx(1e-11));
  CHECK(ChannelParams::figure_defaults(0.2).c_qm == p.c_q);
  CHECK(ChannelParams::figure_defaults(0.01).c_qm == kSpeedOfLightKmPerS);
  ChannelParams bad;
  bad.eta_det = 0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("d2 at the upper bound leaves no first buffer") {
  const ChannelParams p;
  const double L = 300;
  const double bound = L * (p.c_c + p.c_q) / (6 * p.c_c - 2 * p.c_q);
  CHECK(d2_upper_bound(L, p) == doctest::Approx(bound).epsilon(1e-15));
  const auto g = solve_geometry(L, bound, p, 3);
  CHECK(g.d_qm1_km == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::fabs(g.d_qm1_km) < 1e-9);
}

TEST_CASE("d2 above the bound is infeasible and reports it") {
  const ChannelParams p;
  const double bound = d2_upper_bound(300, p);
  try {
    solve_geometry(300, bound * 1.01, p, 0);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.bound() == doctest::Approx(bound));
  }
}

TEST_CASE("d2 = 0 buffer length") {
  ChannelParams p;
  p.c_qm = kSpeedOfLightKmPerS;
  for (double L : {10.0, 250.0, 1000.0}) {
    const auto g = solve_geometry(L, 0, p, 0);
    const double expected = L * p.c_qm * (p.c_c + p.c_q) / (4 * p.c_c * p.c_q);
    CHECK(g.d_qm1_km == doctest::Approx(expected).epsilon(1e-13));
    CHECK(g.d_qm2_km == 0);
  }
}

TEST_CASE("buffer length closed form") {
  ChannelParams p;
  const double L = 400, cqm = p.c_qm, cc = p.c_c, cq = p.c_q;
  for (double d2 : {0.0, 20.0, 60.0, 120.0}) {
    const auto g = solve_geometry(L, d2, p, 0);
    const double printed = (L * cqm * cc + L * cqm * cq - 6 * cqm * cc * d2 + 2 * cqm * cq * d2) / (4 * cc * cq);
    CHECK(g.d_qm1_km == doctest::Approx(std::max(printed, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("timing identity and total length over random configurations") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 1000; ++i) {
    ChannelParams p;
    p.c_q = (0.2 + 0.7 * u(rng)) * kSpeedOfLightKmPerS;
    p.c_c = std::max(p.c_q * (1 + u(rng)), p.c_q);
    const double L = 1 + 2000 * u(rng);
    const double d2 = d2_upper_bound(L, p) * u(rng);
    const auto g = solve_geometry(L, d2, p, static_cast<std::int64_t>(100 * u(rng)));
    CHECK(std::fabs(g.t2_s + g.t_qm1_s - (g.t1_s + g.t_c_s)) < 1e-12);
    CHECK(std::fabs(2 * (2 * g.d1_km + g.d2_km) - L) < 1e-9 * L);
    CHECK(g.d1_km >= 0);
  }
}

TEST_CASE("switch count examples") {
  CHECK(switch_count(9, 10) == 11);
  CHECK(switch_count(8, 2) == 7);
  CHECK(switch_count(1, 2) == 1);
  CHECK(switch_count(0, 2) == 1);
  CHECK(switch_count(10, 10) == 11);
  CHECK(switch_count(11, 10) == 21);
  CHECK(switch_count(1024, 2) == 21);
  CHECK(switch_count(1025, 2) == 23);
  CHECK(switch_count(1'000'000'000'000LL, 10) == 121);
  CHECK_THROWS_AS(switch_count(5, 1), std::domain_error);
}

TEST_CASE("switch count matches the ceiling of the logarithm") {
  for (int b = 2; b <= 12; ++b)
    for (std::int64_t m = 1; m <= 5000; ++m) {
      int digits = 0;
      while (std::pow(static_cast<double>(b), digits) < static_cast<double>(m) - 0.5) ++digits;
      CHECK(switch_count(m, b) == b * digits + 1);
    }
}

TEST_CASE("buffer transmissivity examples") {
  ChannelParams p;
  p.alpha_qm_db_per_km = 0;
  p.eta_switch = 1;
  CHECK(buffer_transmissivity(solve_geometry(100, 0, p, 50), p).value() == 1.0);

  p.eta_switch = 0.99;
  p.base_b = 10;
  const auto g = solve_geometry(100, 0, p, 9);
  CHECK(buffer_transmissivity(g, p).value() == doctest::Approx(std::pow(0.99, 11)).epsilon(1e-14));

  ChannelParams q;
  q.alpha_qm_db_per_km = 0.2;
  q.eta_switch = 1;
  PracticalGeometry h;
  h.d_qm1_km = 3;
  h.d_qm2_km = 2;
  h.eta_qm1 = eta_from_distance(3.0, 0.2);
  h.eta_qm2 = eta_from_distance(2.0, 0.2);
  CHECK(buffer_transmissivity(h, q).value() == doctest::Approx(std::pow(10.0, -0.1)).epsilon(1e-14));
}

TEST_CASE("transmissivity to the final station is monotone") {
  ChannelParams p;
  const double L = 500;
  double prev = 2;
  for (std::int64_t m = 0; m < 3000; m += 37) {
    const double e = solve_geometry(L, 50, p, m).eta_c.value();
    CHECK(e <= prev);
    prev = e;
  }
  prev = 2;
  for (double d2 = 0; d2 <= d2_upper_bound(L, p); d2 += 5) {
    // d2 moves loss from the buffer to fibre; with alpha_QM = alpha both scale the same way
    const double e = solve_geometry(L, d2, p, 10).eta2.value();
    CHECK(e <= prev);
    prev = e;
  }
  prev = 2;
  for (double a = 0; a <= 0.5; a += 0.05) {
    ChannelParams q = p;
    q.alpha_qm_db_per_km = a;
    const double e = solve_geometry(L, 50, q, 10).eta_c.value();
    CHECK(e <= prev);
    prev = e;
  }
  prev = 0;
  for (double s = 0.5; s <= 1.0; s += 0.05) {
    ChannelParams q = p;
    q.eta_switch = std::min(s, 1.0);
    const double e = solve_geometry(L, 50, q, 10).eta_c.value();
    CHECK(e >= prev);
    prev = e;
  }
}

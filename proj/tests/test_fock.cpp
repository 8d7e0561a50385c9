#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "ffqkd/errors.hpp"
#include "ffqkd/fock.hpp"

using namespace ffqkd;
using namespace ffqkd::fock;

namespace {

double binomial(int n, int k) { return std::tgamma(n + 1.0) / (std::tgamma(k + 1.0) * std::tgamma(n - k + 1.0)); }

// exp(theta (a2^dag a1 - a1^dag a2)) on two modes with `cutoff` photons each;
// maps a1^dag -> cos(theta) a1^dag + sin(theta) a2^dag.
Eigen::MatrixXd rotation_generator_exp(double theta, int cutoff) {
  const int d = cutoff + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd a1 = Eigen::kroneckerProduct(a, id);
  const Eigen::MatrixXd a2 = Eigen::kroneckerProduct(id, a);
  const Eigen::MatrixXd g = a2.transpose() * a1 - a1.transpose() * a2;
  return (theta * g).exp();
}

StateVector random_state(std::mt19937_64& rng, int modes, int max_total, int cutoff) {
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> pick(0, max_total);
  StateVector s(modes, cutoff);
  for (int term = 0; term < 12; ++term) {
    std::vector<int> occ(static_cast<std::size_t>(modes), 0);
    int budget = pick(rng);
    for (int k = 0; k < modes && budget > 0; ++k) {
      std::uniform_int_distribution<int> take(0, budget);
      occ[static_cast<std::size_t>(k)] = take(rng);
      budget -= occ[static_cast<std::size_t>(k)];
    }
    s.add(occ, Complex(gauss(rng), gauss(rng)));
  }
  const double norm = std::sqrt(s.norm_squared());
  StateVector out(modes, cutoff);
  for (const auto& [key, amp] : s.terms()) out.add(key, amp / norm);
  return out;
}

double binary_entropy(double p) { return -p * std::log2(p) - (1 - p) * std::log2(1 - p); }

double max_abs_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("occupation keys round-trip") {
  StateVector s(10, 63);
  const std::vector<int> occ{0, 63, 1, 2, 3, 4, 5, 6, 7, 63};
  s.add(occ, 1.0);
  CHECK(s.decode(s.encode(occ)) == occ);
  CHECK(s.amplitude(occ) == Complex(1.0));
  CHECK_THROWS(StateVector(11, 3));
  CHECK_THROWS(StateVector(2, 64));
}

TEST_CASE("beamsplitter binomial law") {
  for (const auto& [t, r] : {std::pair<Complex, Complex>{std::sqrt(0.3), std::sqrt(0.7)},
                             {Complex(0.6, 0.0), Complex(0.0, 0.8)},
                             {std::polar(std::sqrt(0.55), 0.4), std::polar(std::sqrt(0.45), -1.1)}})
    for (int n = 0; n <= 6; ++n) {
      const StateVector out = beamsplitter(fock_state({n, 0}, 6), 0, 1, t, r);
      for (int k = 0; k <= n; ++k) {
        const std::array<int, 2> occ{n - k, k};
        const Complex expected = std::sqrt(binomial(n, k)) * std::pow(t, n - k) * std::pow(r, k);
        CHECK(std::abs(out.amplitude(occ) - expected) < 1e-12);
      }
      CHECK(out.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("beamsplitter matches the exponential of its generator") {
  const int cutoff = 6;
  for (double theta : {0.3, M_PI / 4, 1.2}) {
    const Eigen::MatrixXd u = rotation_generator_exp(theta, cutoff);
    for (int n1 = 0; n1 <= 3; ++n1)
      for (int n2 = 0; n2 <= 3; ++n2) {
        const StateVector out = beamsplitter(fock_state({n1, n2}, cutoff), 0, 1, std::cos(theta), std::sin(theta));
        const int col = n1 * (cutoff + 1) + n2;
        for (int k1 = 0; k1 <= cutoff; ++k1)
          for (int k2 = 0; k2 <= cutoff; ++k2) {
            const std::array<int, 2> occ{k1, k2};
            CHECK(std::abs(out.amplitude(occ) - u(k1 * (cutoff + 1) + k2, col)) < 1e-12);
          }
      }
  }
}

TEST_CASE("single photon split and Hong-Ou-Mandel") {
  const double h = 1 / std::sqrt(2.0);
  const StateVector split = balanced_beamsplitter(fock_state({1, 0}, 2), 0, 1);
  CHECK(std::abs(split.amplitude(std::array{1, 0}) - h) < 1e-15);
  CHECK(std::abs(split.amplitude(std::array{0, 1}) - h) < 1e-15);

  const StateVector hom = balanced_beamsplitter(fock_state({1, 1}, 2), 0, 1);
  CHECK(std::abs(hom.amplitude(std::array{1, 1})) < 1e-15);
  const Complex a20 = hom.amplitude(std::array{2, 0}), a02 = hom.amplitude(std::array{0, 2});
  CHECK(std::abs(a20) == doctest::Approx(h).epsilon(1e-14));
  CHECK(std::abs(a02 + a20) < 1e-14);  // (|2,0> - |0,2>)/sqrt(2) up to a global phase
}

TEST_CASE("beamsplitter preserves norm and photon number") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const StateVector s = random_state(rng, 4, 5, 5);
    const StateVector out = beamsplitter(s, 1, 3, std::polar(0.8, 0.3), std::polar(0.6, -0.7));
    CHECK(out.norm_squared() == doctest::Approx(1.0).epsilon(1e-12));
    double before = 0, after = 0;
    for (int m : {1, 3}) {
      before += mean_photon_number(s, m);
      after += mean_photon_number(out, m);
    }
    CHECK(after == doctest::Approx(before).epsilon(1e-12));
  }
}

TEST_CASE("truncation is reported, never silent") {
  CHECK_THROWS_AS(beamsplitter(fock_state({3, 3}, 4), 0, 1, std::sqrt(0.5), std::sqrt(0.5)), TruncationError);
  CHECK_THROWS_AS(tmsv(0.5, 3), TruncationError);
  CHECK_NOTHROW(tmsv(0.5, required_cutoff(0.5)));
}

TEST_CASE("two-mode squeezed vacuum") {
  const StateVector vac = tmsv(0.0, 3);
  CHECK(vac.size() == 1);
  CHECK(vac.amplitude(std::array{0, 0}) == Complex(1.0));

  const double chi = 0.25;
  const StateVector s = tmsv(chi, 8);
  CHECK(s.norm_squared() == doctest::Approx(1 - std::pow(chi, 18)).epsilon(1e-14));
  CHECK(std::fabs(s.norm_squared() - 1) < 1e-10);
  for (int n = 0; n <= 8; ++n)
    CHECK(s.amplitude(std::array{n, n}).real() == doctest::Approx(std::sqrt(1 - chi * chi) * std::pow(chi, n)));
  CHECK(mean_photon_number(s, 0) == doctest::Approx(chi * chi / (1 - chi * chi)).epsilon(1e-9));
  CHECK(mean_photon_number(s, 0) == doctest::Approx(std::pow(std::sinh(std::atanh(chi)), 2)).epsilon(1e-9));
}

TEST_CASE("loss channel") {
  const StateVector one = fock_state({1}, 1);
  const StateVector kept = loss_channel(one, 0, Transmissivity(1.0));
  CHECK(kept.mode_count() == 2);
  CHECK(kept.amplitude(std::array{1, 0}) == Complex(1.0));
  const StateVector gone = loss_channel(one, 0, Transmissivity(0.0));
  CHECK(std::abs(gone.amplitude(std::array{0, 1})) == doctest::Approx(1.0));
  CHECK(std::abs(gone.amplitude(std::array{1, 0})) < 1e-15);

  const StateVector s = tmsv(0.3, 12);
  for (double eta : {0.9, 0.5, 0.1}) {
    const StateVector lossy = loss_channel(s, 1, Transmissivity(eta));
    CHECK(mean_photon_number(lossy, 1) == doctest::Approx(eta * mean_photon_number(s, 1)).epsilon(1e-10));
    CHECK(mean_photon_number(lossy, 0) == doctest::Approx(mean_photon_number(s, 0)).epsilon(1e-12));
  }
}

TEST_CASE("loss channels compose") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int i = 0; i < 40; ++i) {
    const StateVector s = random_state(rng, 2, 3, 3);
    const double e1 = u(rng), e2 = u(rng);
    const StateVector twice = loss_channel(loss_channel(s, 0, Transmissivity(e1)), 0, Transmissivity(e2));
    const StateVector once = loss_channel(s, 0, Transmissivity(e1 * e2));
    const std::array<int, 2> keep{0, 1};
    const std::array<int, 2> dims{4, 4};
    const DensityMatrix a = partial_trace(twice, keep, dims);
    const DensityMatrix b = partial_trace(once, keep, dims);
    CHECK(max_abs_diff(a.matrix(), b.matrix()) < 1e-12);
    // the mixed-state channel agrees with the purified one
    const DensityMatrix c = loss_channel(partial_trace(s, keep, dims), 0, Transmissivity(e1 * e2));
    CHECK(max_abs_diff(c.matrix(), b.matrix()) < 1e-12);
  }
}

TEST_CASE("density-matrix beamsplitter agrees with the pure-state one") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 20; ++i) {
    const StateVector s = random_state(rng, 3, 3, 3);
    const Complex t = std::polar(std::sqrt(0.3), 0.2), r = std::polar(std::sqrt(0.7), 1.0);
    const StateVector out = beamsplitter(s, 0, 2, t, r);
    const DensityMatrix rho = beamsplitter(pure_density(s), 0, 2, t, r);
    const std::array<int, 3> keep{0, 1, 2};
    const DensityMatrix ref = partial_trace(out, keep, rho.dims());
    CHECK(max_abs_diff(rho.matrix(), ref.matrix()) < 1e-12);
  }
}

TEST_CASE("Bell projections") {
  const double h = 1 / std::sqrt(2.0);
  StateVector plus(3, 1);
  plus.add(std::array{0, 1, 0}, h);
  plus.add(std::array{1, 0, 0}, h);
  CHECK(bell_project(plus, 0, 1, BellSign::Plus).probability == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bell_project(plus, 0, 1, BellSign::Minus).probability < 1e-30);
  CHECK(bell_project(fock_state({0, 0, 1}, 1), 0, 1, BellSign::Plus).probability == 0.0);
  CHECK_THROWS(bell_project(fock_state({0, 1}, 1), 0, 1, BellSign::Plus));

  // spectator mode survives, projected modes are removed
  StateVector three(3, 1);
  three.add(std::array{1, 0, 1}, h);
  three.add(std::array{0, 1, 0}, h);
  const BellProjection p = bell_project(three, 0, 1, BellSign::Minus);
  CHECK(p.state.mode_count() == 1);
  CHECK(p.probability == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("partial trace and entropy") {
  const StateVector product = tensor(fock_state({1}, 2), tmsv(0.0, 2));
  const std::array<int, 1> first{0};
  const DensityMatrix marginal = partial_trace(product, first);
  CHECK((marginal.matrix() * marginal.matrix()).trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(entropy(marginal)) < 1e-12);

  const double h = 1 / std::sqrt(2.0);
  StateVector bell(2, 1);
  bell.add(std::array{1, 0}, h);
  bell.add(std::array{0, 1}, h);
  CHECK(entropy(partial_trace(bell, first)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(entropy(pure_density(bell))) < 1e-12);
  const std::array<int, 1> decoder{1};
  CHECK(rci(pure_density(bell), decoder) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(rci(pure_density(product), decoder)) < 1e-12);
}

TEST_CASE("coherent information of a Bell state mixed with vacuum") {
  const double eps = 0.1, h = 1 / std::sqrt(2.0);
  StateVector bell(2, 1);
  bell.add(std::array{1, 0}, h);
  bell.add(std::array{0, 1}, h);
  Eigen::MatrixXcd m = (1 - eps) * pure_density(bell).matrix();
  m(0, 0) += eps;
  const DensityMatrix rho({2, 2}, m);
  const std::array<int, 1> decoder{1};
  const double value = rci(rho, decoder);
  // spectra: joint {1 - eps, eps}, marginal {(1 + eps)/2, (1 - eps)/2}
  CHECK(value == doctest::Approx(binary_entropy((1 - eps) / 2) - binary_entropy(eps)).epsilon(1e-12));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> joint(m);
  const std::array<int, 1> keep{0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> marg(partial_trace(rho, keep).matrix());
  auto s = [](const Eigen::VectorXd& ev) {
    double out = 0;
    for (double x : ev)
      if (x > 1e-15) out -= x * std::log2(x);
    return out;
  };
  CHECK(value == doctest::Approx(s(marg.eigenvalues()) - s(joint.eigenvalues())).epsilon(1e-12));
  CHECK(coherent_information(rho, decoder) == doctest::Approx(value).epsilon(1e-12));
}

TEST_CASE("entropy rejects unphysical input") {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
  m(0, 0) = 1.2;
  m(1, 1) = -0.2;
  CHECK_THROWS_AS(entropy(DensityMatrix({2}, m)), NumericError);
  m(0, 0) = 0.5;
  m(1, 1) = 0.4;
  CHECK_THROWS_AS(entropy(DensityMatrix({2}, m)), NumericError);
}

TEST_CASE("reverse coherent information is bounded by the local dimension") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 30; ++i) {
    const StateVector s = random_state(rng, 3, 3, 3);
    const std::array<int, 2> keep{0, 1};
    const std::array<int, 2> dims{4, 4};
    const DensityMatrix rho = partial_trace(s, keep, dims).normalized();
    const std::array<int, 1> decoder{1};
    CHECK(rci(rho, decoder) <= std::log2(4.0) + 1e-12);
  }
}

TEST_CASE("threshold detector POVM is complete") {
  for (const DetectorModel det : {DetectorModel::ideal(), DetectorModel{0.93, 1e-3}, DetectorModel{0.5, 0.2}}) {
    for (int n = 0; n < 8; ++n) {
      CHECK(det.no_click(n) + det.click(n) == doctest::Approx(1.0).epsilon(1e-15));
      CHECK(det.no_click(n) == doctest::Approx((1 - det.dark_click_prob) * std::pow(1 - det.efficiency, n)));
    }
    std::mt19937_64 rng(2);
    const StateVector s = random_state(rng, 3, 4, 4);
    double total = 0;
    for (auto p : {ClickPattern::None, ClickPattern::FirstOnly, ClickPattern::SecondOnly, ClickPattern::Both})
      total += threshold_measurement(s, 0, 1, det, p).norm_squared();
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS(DetectorModel{0.0, 0.0}.validate());
  CHECK_THROWS(DetectorModel{0.9, 1.0}.validate());
}

TEST_CASE("ideal detectors on a single photon") {
  // a photon entering port 0 of the balanced splitter lands in either output
  const StateVector s = tensor(fock_state({1, 0}, 1), fock_state({0}, 1));
  const auto det = DetectorModel::ideal();
  CHECK(threshold_measurement(s, 0, 1, det, ClickPattern::FirstOnly).norm_squared() == doctest::Approx(0.5));
  CHECK(threshold_measurement(s, 0, 1, det, ClickPattern::SecondOnly).norm_squared() == doctest::Approx(0.5));
  CHECK(threshold_measurement(s, 0, 1, det, ClickPattern::None).norm_squared() < 1e-30);
  const DensityMatrix rho = threshold_measurement(pure_density(s), 0, 1, det, ClickPattern::FirstOnly);
  CHECK(rho.mode_count() == 1);
  CHECK(rho.trace() == doctest::Approx(0.5));
}

TEST_CASE("fidelity") {
  const StateVector s = tmsv(0.2, 10);
  CHECK(fidelity(s, s) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fidelity(pure_density(s), s) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::fabs(fidelity(fock_state({1, 0}, 1), fock_state({0, 1}, 1))) < 1e-15);
}

TEST_CASE("physicality of reduced states") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 30; ++i) {
    const StateVector s = random_state(rng, 4, 4, 4);
    const std::array<int, 2> keep{2, 0};
    const PhysicalityReport r = physicality(partial_trace(s, keep));
    CHECK(r.min_eigenvalue > -1e-10);
    CHECK(r.hermitian_defect < 1e-12);
    CHECK(r.trace == doctest::Approx(1.0).epsilon(1e-12));
  }
}

namespace {

// One side of the chain: TMSV (A, C), split photon (D, B), loss eta1 on C and
// D into (E, F), ideal Bell projection on (C, D), loss eta_c on B into G.
// Remaining modes: A, B, E, F, G.
StateVector one_side(double chi, double eta1, double eta_c, int cutoff) {
  StateVector s = tensor(tmsv(chi, cutoff, 1.0), balanced_beamsplitter(fock_state({1, 0}, cutoff), 0, 1));
  s = loss_channel(s, 1, Transmissivity(eta1));
  s = loss_channel(s, 2, Transmissivity(eta1));
  s = bell_project(s, 1, 2, BellSign::Plus).state;
  return loss_channel(s, 1, Transmissivity(eta_c));
}

}  // namespace

TEST_CASE("final state has the six-component structure") {
  const double chi = 0.3, eta1 = 0.5, eta_c = 0.7;
  const StateVector side = one_side(chi, eta1, eta_c, 4);
  // modes after the final projection: A, E, F, G, A', E', F', G'
  const StateVector out = bell_project(tensor(side, side), 1, 6, BellSign::Plus).state;

  const double norm = std::sqrt(1 - chi * chi);
  auto vac = [&](int n) { return std::pow(chi, n) * std::sqrt(eta1) * norm * std::pow(1 - eta1, n / 2.0); };
  auto kept = [&](int n) {
    return std::pow(chi, n) * std::sqrt(eta1 * eta_c * n) * norm * std::pow(1 - eta1, (n - 1) / 2.0);
  };
  auto lost_g = [&](int n) {
    return std::pow(chi, n) * std::sqrt(eta1 * n) * norm * std::pow(1 - eta1, (n - 1) / 2.0) * std::sqrt(1 - eta_c);
  };
  auto lost_f = [&](int n) {
    return std::pow(chi, n) * std::sqrt(eta1 * n) * norm * std::sqrt(1 - eta1) * std::pow(1 - eta1, (n - 1) / 2.0);
  };

  std::vector<std::pair<std::array<int, 8>, double>> expected;
  for (int n = 0; n <= 2; ++n)
    for (int m = 0; m <= 2; ++m) {
      if (m >= 1) expected.push_back({{n, n, 0, 0, m, m - 1, 0, 0}, vac(n) * kept(m)});
      if (n >= 1) expected.push_back({{n, n - 1, 0, 0, m, m, 0, 0}, kept(n) * vac(m)});
      if (n >= 1 && m >= 1) {
        expected.push_back({{n, n - 1, 0, 1, m, m - 1, 0, 0}, lost_g(n) * kept(m)});
        expected.push_back({{n, n - 1, 0, 0, m, m - 1, 0, 1}, kept(n) * lost_g(m)});
        expected.push_back({{n, n - 1, 0, 0, m, m - 1, 1, 0}, kept(n) * lost_f(m)});
        expected.push_back({{n, n - 1, 1, 0, m, m - 1, 0, 0}, lost_f(n) * kept(m)});
      }
    }
  REQUIRE(expected.size() == 28);
  const Complex ratio = out.amplitude(expected.front().first) / expected.front().second;
  CHECK(std::abs(ratio) > 0);
  for (const auto& [occ, value] : expected) CHECK(std::abs(out.amplitude(occ) / value - ratio) < 1e-12);

  // every surviving term belongs to one of the six families
  for (const auto& [key, amp] : out.terms()) {
    if (std::abs(amp) < 1e-15) continue;
    const auto o = out.decode(key);
    const int env = o[2] + o[3] + o[6] + o[7];
    const bool family_a = o[1] == o[0] && o[4] >= 1 && o[5] == o[4] - 1 && env == 0;
    const bool family_b = o[0] >= 1 && o[1] == o[0] - 1 && o[5] == o[4] && env == 0;
    const bool family_env = o[0] >= 1 && o[1] == o[0] - 1 && o[4] >= 1 && o[5] == o[4] - 1 && env == 1;
    CHECK((family_a || family_b || family_env));
  }
}

TEST_CASE("lossless relay teleports the two-mode squeezed state") {
  // loss eta1 = 1 on C and D: the herald moves Alice's C mode onto B
  const double chi = 1e-3;
  const StateVector side = one_side(chi, 1.0, 1.0, 3);
  const std::array<int, 2> ab{0, 1};
  const DensityMatrix rho = partial_trace(side, ab).normalized();
  StateVector target(2, 3);
  const double norm = std::sqrt(1 - chi * chi);
  for (int n = 0; n <= 1; ++n) target.add(std::array{n, n}, norm * std::pow(chi, n));
  CHECK(fidelity(rho, target) >= 0.999);
}

TEST_CASE("minus outcome is corrected by a phase flip") {
  const double chi = 1e-3, eta1 = 0.2;
  StateVector s = tensor(tmsv(chi, 3), balanced_beamsplitter(fock_state({1, 0}, 3), 0, 1));
  s = loss_channel(loss_channel(s, 1, Transmissivity(eta1)), 2, Transmissivity(eta1));
  const BellProjection plus = bell_project(s, 1, 2, BellSign::Plus);
  const BellProjection minus = bell_project(s, 1, 2, BellSign::Minus);
  CHECK(minus.probability == doctest::Approx(plus.probability).epsilon(1e-12));
  const std::array<int, 2> ab{0, 1};
  const std::array<int, 2> dims{4, 2};
  const DensityMatrix p = partial_trace(plus.state, ab, dims).normalized();
  const DensityMatrix m = partial_trace(phase_flip(minus.state, 1), ab, dims).normalized();
  CHECK(max_abs_diff(p.matrix(), m.matrix()) < 1e-12);
  CHECK(max_abs_diff(p.matrix(), partial_trace(minus.state, ab, dims).normalized().matrix()) > 1e-4);
  // P0 = 2P with P = eta1/4 to leading order in chi
  CHECK(2 * plus.probability == doctest::Approx(eta1 / 2).epsilon(1e-3));
}

#include "ffqkd/fock.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unsupported/Eigen/KroneckerProduct>

#include "ffqkd/errors.hpp"

namespace ffqkd::fock {

namespace {

using Key = StateVector::Key;

constexpr int kMaxPhotons = 2 * kMaxCutoff;

const std::array<double, kMaxPhotons + 1>& factorials() {
  static const auto table = [] {
    std::array<double, kMaxPhotons + 1> f{};
    f[0] = 1;
    for (int n = 1; n <= kMaxPhotons; ++n) f[n] = f[n - 1] * n;
    return f;
  }();
  return table;
}

double binomial(int n, int k) {
  const auto& f = factorials();
  return std::round(f[n] / (f[k] * f[n - k]));
}

Complex ipow(Complex z, int n) {
  Complex out = 1;
  for (int i = 0; i < n; ++i) out *= z;
  return out;
}

void check_mode(int mode, int modes, const char* where) {
  if (mode < 0 || mode >= modes)
    throw std::out_of_range(std::string(where) + ": mode index " + std::to_string(mode) + " out of range");
}

void check_pair(int i, int j, int modes, const char* where) {
  check_mode(i, modes, where);
  check_mode(j, modes, where);
  if (i == j) throw std::invalid_argument(std::string(where) + ": modes must be distinct");
}

// Removes the listed modes (ascending) and packs the rest down.
Key remove_modes(Key key, int modes, std::span<const int> removed) {
  Key out = 0;
  int pos = 0;
  std::size_t r = 0;
  for (int mode = 0; mode < modes; ++mode) {
    if (r < removed.size() && removed[r] == mode) {
      ++r;
      continue;
    }
    out |= static_cast<Key>(StateVector::occupation(key, mode)) << (StateVector::kBits * pos++);
  }
  return out;
}

std::vector<Eigen::Index> strides(const std::vector<int>& dims) {
  std::vector<Eigen::Index> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * dims[k + 1];
  return s;
}

Eigen::Index product(const std::vector<int>& dims) {
  Eigen::Index n = 1;
  for (int d : dims) n *= d;
  return n;
}

// Occupation of `mode` for every basis index.
std::vector<int> mode_digits(const std::vector<int>& dims, int mode) {
  const auto s = strides(dims);
  const Eigen::Index n = product(dims);
  std::vector<int> out(n);
  for (Eigen::Index x = 0; x < n; ++x) out[x] = static_cast<int>((x / s[mode]) % dims[mode]);
  return out;
}

using SparseOp = Eigen::SparseMatrix<Complex>;

// Single-mode operator `op` (rows: new dim, cols: old dim) lifted to the full space.
SparseOp embed(const std::vector<int>& dims, int mode, const Eigen::MatrixXcd& op) {
  std::vector<int> out_dims = dims;
  out_dims[mode] = static_cast<int>(op.rows());
  const auto s_in = strides(dims);
  const auto s_out = strides(out_dims);
  const Eigen::Index n_in = product(dims);
  std::vector<Eigen::Triplet<Complex>> trips;
  for (Eigen::Index x = 0; x < n_in; ++x) {
    const int n = static_cast<int>((x / s_in[mode]) % dims[mode]);
    const Eigen::Index base = x - n * s_in[mode];
    // base in the output layout: re-express every digit with output strides
    Eigen::Index y0 = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (static_cast<int>(k) == mode) continue;
      y0 += ((base / s_in[k]) % dims[k]) * s_out[k];
    }
    for (Eigen::Index k = 0; k < op.rows(); ++k) {
      const Complex v = op(k, n);
      if (v != Complex(0)) trips.emplace_back(y0 + k * s_out[mode], x, v);
    }
  }
  SparseOp u(product(out_dims), n_in);
  u.setFromTriplets(trips.begin(), trips.end());
  return u;
}

// Connected components of the nonzero pattern of a Hermitian matrix.
std::vector<std::vector<Eigen::Index>> blocks(const Eigen::MatrixXcd& m) {
  const Eigen::Index n = m.rows();
  std::vector<Eigen::Index> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Eigen::Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = c + 1; r < n; ++r)
      if (m(r, c) != Complex(0)) parent[find(r)] = find(c);
  std::unordered_map<Eigen::Index, std::size_t> slot;
  std::vector<std::vector<Eigen::Index>> out;
  for (Eigen::Index x = 0; x < n; ++x) {
    const auto root = find(x);
    auto [it, fresh] = slot.try_emplace(root, out.size());
    if (fresh) out.emplace_back();
    out[it->second].push_back(x);
  }
  return out;
}

std::vector<double> spectrum(const Eigen::MatrixXcd& m) {
  std::vector<double> values;
  values.reserve(m.rows());
  for (const auto& block : blocks(m)) {
    const auto k = static_cast<Eigen::Index>(block.size());
    if (k == 1) {
      values.push_back(m(block[0], block[0]).real());
      continue;
    }
    Eigen::MatrixXcd sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = m(block[a], block[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("entropy: eigen-decomposition failed");
    for (Eigen::Index a = 0; a < k; ++a) values.push_back(es.eigenvalues()(a));
  }
  return values;
}

std::vector<int> complement(int modes, std::span<const int> subset) {
  std::vector<int> out;
  for (int k = 0; k < modes; ++k)
    if (std::find(subset.begin(), subset.end(), k) == subset.end()) out.push_back(k);
  return out;
}

std::vector<double> pattern_weights(const DetectorModel& det, bool clicks, int max_n) {
  return clicks ? det.click_weights(max_n) : det.no_click_weights(max_n);
}

std::pair<bool, bool> clicks_of(ClickPattern pattern) {
  switch (pattern) {
    case ClickPattern::None: return {false, false};
    case ClickPattern::FirstOnly: return {true, false};
    case ClickPattern::SecondOnly: return {false, true};
    case ClickPattern::Both: return {true, true};
  }
  return {false, false};
}

}  // namespace

// ---------------------------------------------------------------- StateVector

StateVector::StateVector(int modes, int cutoff) : modes_(modes), cutoff_(cutoff) {
  if (modes < 1 || modes > kMaxModes)
    throw std::domain_error("StateVector: mode count must lie in [1, " + std::to_string(kMaxModes) + "]");
  if (cutoff < 1 || cutoff > kMaxCutoff)
    throw std::domain_error("StateVector: cutoff must lie in [1, " + std::to_string(kMaxCutoff) + "]");
}

StateVector::Key StateVector::encode(std::span<const int> occupation) const {
  if (static_cast<int>(occupation.size()) != modes_)
    throw std::invalid_argument("StateVector: occupation tuple has the wrong length");
  Key key = 0;
  for (int k = 0; k < modes_; ++k) {
    const int n = occupation[k];
    if (n < 0 || n > cutoff_) throw std::out_of_range("StateVector: occupation outside [0, cutoff]");
    key |= static_cast<Key>(n) << (kBits * k);
  }
  return key;
}

std::vector<int> StateVector::decode(Key key) const {
  std::vector<int> out(modes_);
  for (int k = 0; k < modes_; ++k) out[k] = occupation(key, k);
  return out;
}

Complex StateVector::amplitude(std::span<const int> occupation) const {
  const auto it = terms_.find(encode(occupation));
  return it == terms_.end() ? Complex(0) : it->second;
}

void StateVector::add(std::span<const int> occupation, Complex amp) { add(encode(occupation), amp); }

void StateVector::add(Key key, Complex amp) {
  if (amp == Complex(0)) return;
  terms_[key] += amp;
}

double StateVector::norm_squared() const {
  double s = 0;
  for (const auto& [key, amp] : terms_) s += std::norm(amp);
  return s;
}

StateVector with_cutoff(StateVector state, int cutoff) {
  if (cutoff < 1 || cutoff > kMaxCutoff) throw std::domain_error("with_cutoff: cutoff out of range");
  for (const auto& [key, amp] : state.terms_)
    for (int k = 0; k < state.modes_; ++k)
      if (StateVector::occupation(key, k) > cutoff)
        throw TruncationError("with_cutoff: stored occupation exceeds the new cutoff");
  state.cutoff_ = cutoff;
  return state;
}

StateVector with_extra_modes(StateVector state, int count) {
  if (count < 0 || state.modes_ + count > kMaxModes)
    throw std::domain_error("with_extra_modes: too many modes");
  state.modes_ += count;
  return state;
}

StateVector fock_state(std::span<const int> occupation, int cutoff) {
  StateVector s(static_cast<int>(occupation.size()), cutoff);
  s.add(occupation, 1.0);
  return s;
}

StateVector fock_state(std::initializer_list<int> occupation, int cutoff) {
  return fock_state(std::span<const int>(occupation.begin(), occupation.size()), cutoff);
}

int required_cutoff(double chi, double eps) {
  if (!(chi >= 0 && chi < 1)) throw std::domain_error("required_cutoff: chi must lie in [0, 1)");
  if (!(eps > 0 && eps < 1)) throw std::domain_error("required_cutoff: eps must lie in (0, 1)");
  if (chi == 0) return 1;
  // chi^{2(n+1)} <= eps
  const int n = static_cast<int>(std::ceil(std::log(eps) / (2 * std::log(chi)) - 1 - 1e-12));
  return std::clamp(n, 1, kMaxCutoff);
}

StateVector tmsv(double chi, int cutoff, double eps) {
  if (!(chi >= 0 && chi < 1)) throw std::domain_error("tmsv: chi must lie in [0, 1)");
  const double tail = std::pow(chi, 2.0 * (cutoff + 1));
  if (tail > eps)
    throw TruncationError("tmsv: cutoff " + std::to_string(cutoff) + " leaves tail weight " +
                          std::to_string(tail) + " above tolerance");
  StateVector s(2, cutoff);
  const double norm = std::sqrt(1 - chi * chi);
  double c = norm;
  for (int n = 0; n <= cutoff; ++n, c *= chi) {
    const std::array<int, 2> occ{n, n};
    s.add(occ, c);
  }
  return s;
}

StateVector tensor(const StateVector& a, const StateVector& b) {
  StateVector out(a.mode_count() + b.mode_count(), std::max(a.cutoff(), b.cutoff()));
  const auto shift = static_cast<unsigned>(StateVector::kBits * a.mode_count());
  for (const auto& [ka, va] : a.terms())
    for (const auto& [kb, vb] : b.terms()) out.add(ka | (kb << shift), va * vb);
  return out;
}

std::vector<Complex> beamsplitter_column(int n1, int n2, Complex t, Complex r) {
  if (n1 < 0 || n2 < 0 || n1 + n2 > kMaxPhotons) throw std::domain_error("beamsplitter_column: bad photon numbers");
  const int total = n1 + n2;
  std::vector<Complex> poly(total + 1, 0.0);  // indexed by power of a1^dag
  const Complex mr = -std::conj(r);
  const Complex tc = std::conj(t);
  for (int j = 0; j <= n1; ++j) {
    const Complex c1 = binomial(n1, j) * ipow(t, n1 - j) * ipow(r, j);
    for (int l = 0; l <= n2; ++l) {
      const Complex c2 = binomial(n2, l) * ipow(mr, n2 - l) * ipow(tc, l);
      poly[(n1 - j) + (n2 - l)] += c1 * c2;
    }
  }
  const auto& f = factorials();
  const double in_norm = f[n1] * f[n2];
  for (int k = 0; k <= total; ++k) poly[k] *= std::sqrt(f[k] * f[total - k] / in_norm);
  return poly;
}

StateVector beamsplitter(const StateVector& state, int i, int j, Complex t, Complex r, double eps) {
  check_pair(i, j, state.mode_count(), "beamsplitter");
  if (std::abs(std::norm(t) + std::norm(r) - 1) > 1e-12)
    throw std::domain_error("beamsplitter: |t|^2 + |r|^2 must equal 1");
  StateVector out(state.mode_count(), state.cutoff());
  std::map<std::tuple<Key, int, int>, Complex> dropped;
  const int cap = state.cutoff();
  for (const auto& [key, amp] : state.terms()) {
    const int n1 = StateVector::occupation(key, i);
    const int n2 = StateVector::occupation(key, j);
    const auto col = beamsplitter_column(n1, n2, t, r);
    const int total = n1 + n2;
    for (int k = 0; k <= total; ++k) {
      if (col[k] == Complex(0)) continue;
      const Key nk = StateVector::with_occupation(StateVector::with_occupation(key, i, k > cap ? 0 : k), j,
                                                  total - k > cap ? 0 : total - k);
      if (k > cap || total - k > cap) {
        // keyed by the full output so interference among dropped branches is kept
        const Key rest = StateVector::with_occupation(StateVector::with_occupation(key, i, 0), j, 0);
        dropped[{rest, k, total - k}] += amp * col[k];
        continue;
      }
      out.add(nk, amp * col[k]);
    }
  }
  double lost = 0;
  for (const auto& [key, amp] : dropped) lost += std::norm(amp);
  if (lost > eps)
    throw TruncationError("beamsplitter: output photon number exceeds cutoff " + std::to_string(cap) +
                          " with weight " + std::to_string(lost));
  return out;
}

StateVector loss_channel(const StateVector& state, int mode, Transmissivity eta, double eps) {
  check_mode(mode, state.mode_count(), "loss_channel");
  const int env = state.mode_count();
  StateVector widened = with_extra_modes(state, 1);
  return beamsplitter(widened, mode, env, std::sqrt(eta.value()), std::sqrt(1 - eta.value()), eps);
}

BellProjection bell_project(const StateVector& state, int i, int j, BellSign sign) {
  check_pair(i, j, state.mode_count(), "bell_project");
  if (state.mode_count() < 3) throw std::invalid_argument("bell_project: no modes would remain");
  std::array<int, 2> removed{std::min(i, j), std::max(i, j)};
  StateVector out(state.mode_count() - 2, state.cutoff());
  const double s = sign == BellSign::Plus ? 1.0 : -1.0;
  const double h = 1 / std::sqrt(2.0);
  for (const auto& [key, amp] : state.terms()) {
    const int ni = StateVector::occupation(key, i);
    const int nj = StateVector::occupation(key, j);
    double c = 0;
    if (ni == 0 && nj == 1) c = h;
    else if (ni == 1 && nj == 0) c = s * h;
    else continue;
    out.add(remove_modes(key, state.mode_count(), removed), c * amp);
  }
  const double p = out.norm_squared();
  return {std::move(out), p};
}

StateVector project_mode(const StateVector& state, int mode, int n) {
  check_mode(mode, state.mode_count(), "project_mode");
  if (state.mode_count() < 2) throw std::invalid_argument("project_mode: no modes would remain");
  const std::array<int, 1> removed{mode};
  StateVector out(state.mode_count() - 1, state.cutoff());
  for (const auto& [key, amp] : state.terms())
    if (StateVector::occupation(key, mode) == n) out.add(remove_modes(key, state.mode_count(), removed), amp);
  return out;
}

StateVector apply_diagonal(const StateVector& state, int mode, std::span<const double> weights) {
  check_mode(mode, state.mode_count(), "apply_diagonal");
  StateVector out(state.mode_count(), state.cutoff());
  for (const auto& [key, amp] : state.terms()) {
    const auto n = static_cast<std::size_t>(StateVector::occupation(key, mode));
    if (n >= weights.size()) throw std::out_of_range("apply_diagonal: weight table too short");
    if (weights[n] < 0) throw std::domain_error("apply_diagonal: negative weight");
    out.add(key, std::sqrt(weights[n]) * amp);
  }
  return out;
}

StateVector phase_flip(const StateVector& state, int mode) {
  check_mode(mode, state.mode_count(), "phase_flip");
  StateVector out(state.mode_count(), state.cutoff());
  for (const auto& [key, amp] : state.terms())
    out.add(key, StateVector::occupation(key, mode) % 2 ? -amp : amp);
  return out;
}

double mean_photon_number(const StateVector& state, int mode) {
  check_mode(mode, state.mode_count(), "mean_photon_number");
  double num = 0, den = 0;
  for (const auto& [key, amp] : state.terms()) {
    num += StateVector::occupation(key, mode) * std::norm(amp);
    den += std::norm(amp);
  }
  return den > 0 ? num / den : 0.0;
}

// --------------------------------------------------------------- DensityMatrix

DensityMatrix::DensityMatrix(std::vector<int> dims, Eigen::MatrixXcd matrix)
    : dims_(std::move(dims)), matrix_(std::move(matrix)) {
  if (dims_.empty()) throw std::invalid_argument("DensityMatrix: at least one mode required");
  for (int d : dims_)
    if (d < 1) throw std::invalid_argument("DensityMatrix: mode dimension must be >= 1");
  const Eigen::Index n = product(dims_);
  if (matrix_.rows() != n || matrix_.cols() != n)
    throw std::invalid_argument("DensityMatrix: matrix size does not match mode dimensions");
}

int DensityMatrix::cutoff() const noexcept { return *std::max_element(dims_.begin(), dims_.end()) - 1; }

DensityMatrix DensityMatrix::normalized() const {
  const double tr = trace();
  if (!(tr > 0)) throw NumericError("DensityMatrix: cannot normalise a state with zero trace");
  return DensityMatrix(dims_, matrix_ / tr);
}

Eigen::Index DensityMatrix::index(std::span<const int> occupation) const {
  if (occupation.size() != dims_.size()) throw std::invalid_argument("DensityMatrix: occupation has wrong length");
  Eigen::Index x = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (occupation[k] < 0 || occupation[k] >= dims_[k]) throw std::out_of_range("DensityMatrix: occupation out of range");
    x = x * dims_[k] + occupation[k];
  }
  return x;
}

std::vector<int> DensityMatrix::occupation(Eigen::Index index) const {
  std::vector<int> occ(dims_.size());
  for (int k = static_cast<int>(dims_.size()) - 1; k >= 0; --k) {
    occ[k] = static_cast<int>(index % dims_[k]);
    index /= dims_[k];
  }
  return occ;
}

DensityMatrix pure_density(const StateVector& state) {
  std::vector<int> all(state.mode_count());
  std::iota(all.begin(), all.end(), 0);
  return partial_trace(state, all);
}

DensityMatrix partial_trace(const StateVector& state, std::span<const int> keep) {
  std::vector<int> dims(keep.size(), 1);
  for (std::size_t k = 0; k < keep.size(); ++k) {
    check_mode(keep[k], state.mode_count(), "partial_trace");
    for (const auto& [key, amp] : state.terms())
      dims[k] = std::max(dims[k], StateVector::occupation(key, keep[k]) + 1);
  }
  return partial_trace(state, keep, dims);
}

DensityMatrix partial_trace(const StateVector& state, std::span<const int> keep, std::span<const int> dims) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep must be nonempty");
  if (dims.size() != keep.size()) throw std::invalid_argument("partial_trace: one dimension per kept mode");
  Key kept_mask = 0;
  for (int mode : keep) {
    check_mode(mode, state.mode_count(), "partial_trace");
    kept_mask |= StateVector::kMask << (StateVector::kBits * mode);
  }
  std::vector<int> dv(dims.begin(), dims.end());
  const Eigen::Index n = product(dv);
  // group amplitudes by the traced-out occupation
  std::unordered_map<Key, std::vector<std::pair<Eigen::Index, Complex>>> groups;
  for (const auto& [key, amp] : state.terms()) {
    Eigen::Index x = 0;
    bool inside = true;
    for (std::size_t k = 0; k < keep.size(); ++k) {
      const int occ = StateVector::occupation(key, keep[k]);
      if (occ >= dims[k]) {
        inside = false;
        break;
      }
      x = x * dims[k] + occ;
    }
    if (!inside) throw std::out_of_range("partial_trace: stored occupation exceeds requested dimension");
    groups[key & ~kept_mask].emplace_back(x, amp);
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& [traced, vec] : groups)
    for (const auto& [x, ax] : vec)
      for (const auto& [y, ay] : vec) rho(x, y) += ax * std::conj(ay);
  return DensityMatrix(std::move(dv), std::move(rho));
}

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep) {
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep must be nonempty");
  const auto& dims = rho.dims();
  for (int mode : keep) check_mode(mode, rho.mode_count(), "partial_trace");
  const auto traced = complement(rho.mode_count(), keep);
  std::vector<int> kd, td;
  for (int mode : keep) kd.push_back(dims[mode]);
  for (int mode : traced) td.push_back(dims[mode]);
  const auto s = strides(dims);
  const Eigen::Index nk = product(kd);
  const Eigen::Index nt = td.empty() ? 1 : product(td);
  // full index of (kept x, traced y)
  auto full = [&](Eigen::Index x, Eigen::Index y) {
    Eigen::Index out = 0;
    for (int k = static_cast<int>(keep.size()) - 1; k >= 0; --k) {
      out += (x % kd[k]) * s[keep[k]];
      x /= kd[k];
    }
    for (int k = static_cast<int>(traced.size()) - 1; k >= 0; --k) {
      out += (y % td[k]) * s[traced[k]];
      y /= td[k];
    }
    return out;
  };
  std::vector<Eigen::Index> map(nk * nt);
  for (Eigen::Index y = 0; y < nt; ++y)
    for (Eigen::Index x = 0; x < nk; ++x) map[y * nk + x] = full(x, y);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(nk, nk);
  const auto& m = rho.matrix();
  for (Eigen::Index y = 0; y < nt; ++y)
    for (Eigen::Index b = 0; b < nk; ++b) {
      const Eigen::Index col = map[y * nk + b];
      for (Eigen::Index a = 0; a < nk; ++a) out(a, b) += m(map[y * nk + a], col);
    }
  return DensityMatrix(std::move(kd), std::move(out));
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  std::vector<int> dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  Eigen::MatrixXcd m = Eigen::kroneckerProduct(a.matrix(), b.matrix());
  return DensityMatrix(std::move(dims), std::move(m));
}

DensityMatrix beamsplitter(const DensityMatrix& rho, int i, int j, Complex t, Complex r) {
  check_pair(i, j, rho.mode_count(), "beamsplitter");
  if (std::abs(std::norm(t) + std::norm(r) - 1) > 1e-12)
    throw std::domain_error("beamsplitter: |t|^2 + |r|^2 must equal 1");
  const auto& dims = rho.dims();
  const int out_dim = dims[i] + dims[j] - 1;
  if (out_dim - 1 > kMaxPhotons) throw TruncationError("beamsplitter: photon number too large");
  std::vector<int> out_dims = dims;
  out_dims[i] = out_dims[j] = out_dim;
  const auto s_in = strides(dims);
  const auto s_out = strides(out_dims);
  const Eigen::Index n_in = product(dims);
  std::vector<Eigen::Triplet<Complex>> trips;
  std::map<std::pair<int, int>, std::vector<Complex>> cache;
  for (Eigen::Index x = 0; x < n_in; ++x) {
    Eigen::Index y0 = 0;
    int n1 = 0, n2 = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const int d = static_cast<int>((x / s_in[k]) % dims[k]);
      if (static_cast<int>(k) == i) n1 = d;
      else if (static_cast<int>(k) == j) n2 = d;
      else y0 += d * s_out[k];
    }
    auto [it, fresh] = cache.try_emplace({n1, n2});
    if (fresh) it->second = beamsplitter_column(n1, n2, t, r);
    const auto& col = it->second;
    for (int k = 0; k <= n1 + n2; ++k)
      if (col[k] != Complex(0)) trips.emplace_back(y0 + k * s_out[i] + (n1 + n2 - k) * s_out[j], x, col[k]);
  }
  SparseOp u(product(out_dims), n_in);
  u.setFromTriplets(trips.begin(), trips.end());
  Eigen::MatrixXcd half = u * rho.matrix();
  Eigen::MatrixXcd out = (u * half.adjoint()).adjoint();
  return DensityMatrix(std::move(out_dims), std::move(out));
}

DensityMatrix loss_channel(const DensityMatrix& rho, int mode, Transmissivity eta) {
  check_mode(mode, rho.mode_count(), "loss_channel");
  const int d = rho.dims()[mode];
  const double e = eta.value();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.dimension(), rho.dimension());
  for (int k = 0; k < d; ++k) {
    Eigen::MatrixXcd kraus = Eigen::MatrixXcd::Zero(d, d);
    for (int n = k; n < d; ++n)
      kraus(n - k, n) = std::sqrt(binomial(n, k) * std::pow(e, n - k) * std::pow(1 - e, k));
    if (kraus.isZero(0)) continue;
    const SparseOp op = embed(rho.dims(), mode, kraus);
    Eigen::MatrixXcd half = op * rho.matrix();
    out += (op * half.adjoint()).adjoint();
  }
  return DensityMatrix(rho.dims(), std::move(out));
}

DensityMatrix apply_diagonal(const DensityMatrix& rho, int mode, std::span<const double> weights) {
  check_mode(mode, rho.mode_count(), "apply_diagonal");
  const auto digits = mode_digits(rho.dims(), mode);
  Eigen::VectorXd root(rho.dimension());
  for (Eigen::Index x = 0; x < rho.dimension(); ++x) {
    const auto n = static_cast<std::size_t>(digits[x]);
    if (n >= weights.size()) throw std::out_of_range("apply_diagonal: weight table too short");
    if (weights[n] < 0) throw std::domain_error("apply_diagonal: negative weight");
    root(x) = std::sqrt(weights[n]);
  }
  Eigen::MatrixXcd out = root.asDiagonal() * rho.matrix() * root.asDiagonal();
  return DensityMatrix(rho.dims(), std::move(out));
}

DensityMatrix phase_flip(const DensityMatrix& rho, int mode) {
  check_mode(mode, rho.mode_count(), "phase_flip");
  const auto digits = mode_digits(rho.dims(), mode);
  Eigen::VectorXd sign(rho.dimension());
  for (Eigen::Index x = 0; x < rho.dimension(); ++x) sign(x) = digits[x] % 2 ? -1.0 : 1.0;
  Eigen::MatrixXcd out = sign.asDiagonal() * rho.matrix() * sign.asDiagonal();
  return DensityMatrix(rho.dims(), std::move(out));
}

double mean_photon_number(const DensityMatrix& rho, int mode) {
  check_mode(mode, rho.mode_count(), "mean_photon_number");
  const auto digits = mode_digits(rho.dims(), mode);
  double num = 0;
  for (Eigen::Index x = 0; x < rho.dimension(); ++x) num += digits[x] * rho.matrix()(x, x).real();
  return num / rho.trace();
}

double entropy(const DensityMatrix& rho) {
  const double tr = rho.trace();
  if (std::abs(tr - 1) > 1e-8) throw NumericError("entropy: state is not normalised (trace " + std::to_string(tr) + ")");
  double s = 0;
  for (double lambda : spectrum(rho.matrix())) {
    if (lambda < -1e-10) throw NumericError("entropy: negative eigenvalue " + std::to_string(lambda));
    if (lambda > 0) s -= lambda * std::log2(lambda);
  }
  return s;
}

double rci(const DensityMatrix& joint, std::span<const int> decoder_modes) {
  const auto rest = complement(joint.mode_count(), decoder_modes);
  if (rest.empty()) throw std::invalid_argument("rci: decoder cannot hold every mode");
  return entropy(partial_trace(joint, rest)) - entropy(joint);
}

double coherent_information(const DensityMatrix& joint, std::span<const int> decoder_modes) {
  for (int mode : decoder_modes) check_mode(mode, joint.mode_count(), "coherent_information");
  std::vector<int> keep(decoder_modes.begin(), decoder_modes.end());
  return entropy(partial_trace(joint, keep)) - entropy(joint);
}

double fidelity(const DensityMatrix& rho, const StateVector& target) {
  if (target.mode_count() != rho.mode_count()) throw std::invalid_argument("fidelity: mode count mismatch");
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(rho.dimension());
  double norm = 0;
  for (const auto& [key, amp] : target.terms()) {
    norm += std::norm(amp);
    const auto occ = target.decode(key);
    bool inside = true;
    for (int k = 0; k < rho.mode_count(); ++k) inside = inside && occ[k] < rho.dims()[k];
    if (inside) psi(rho.index(occ)) += amp;
  }
  if (!(norm > 0)) throw std::invalid_argument("fidelity: target has zero norm");
  return (psi.adjoint() * rho.matrix() * psi)(0, 0).real() / (norm * rho.trace());
}

double fidelity(const StateVector& a, const StateVector& b) {
  if (a.mode_count() != b.mode_count()) throw std::invalid_argument("fidelity: mode count mismatch");
  Complex overlap = 0;
  for (const auto& [key, amp] : a.terms()) {
    const auto it = b.terms().find(key);
    if (it != b.terms().end()) overlap += std::conj(amp) * it->second;
  }
  return std::norm(overlap) / (a.norm_squared() * b.norm_squared());
}

PhysicalityReport physicality(const DensityMatrix& rho) {
  const auto& m = rho.matrix();
  const double defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXcd herm = (m + m.adjoint()) / 2.0;
  const auto values = spectrum(herm);
  return {*std::min_element(values.begin(), values.end()), defect, rho.trace()};
}

// -------------------------------------------------------------------- detectors

void DetectorModel::validate() const {
  if (!(efficiency > 0 && efficiency <= 1)) throw std::domain_error("detector efficiency must lie in (0, 1]");
  if (!(dark_click_prob >= 0 && dark_click_prob < 1))
    throw std::domain_error("dark click probability must lie in [0, 1)");
}

double DetectorModel::no_click(int n) const {
  return (1 - dark_click_prob) * std::pow(1 - efficiency, n);
}

std::vector<double> DetectorModel::no_click_weights(int max_n) const {
  std::vector<double> w(max_n + 1);
  for (int n = 0; n <= max_n; ++n) w[n] = no_click(n);
  return w;
}

std::vector<double> DetectorModel::click_weights(int max_n) const {
  std::vector<double> w(max_n + 1);
  for (int n = 0; n <= max_n; ++n) w[n] = click(n);
  return w;
}

StateVector threshold_measurement(const StateVector& state, int i, int j, const DetectorModel& det,
                                  ClickPattern pattern) {
  det.validate();
  const auto [first, second] = clicks_of(pattern);
  StateVector mixed = balanced_beamsplitter(state, i, j);
  const auto wi = pattern_weights(det, first, mixed.cutoff());
  const auto wj = pattern_weights(det, second, mixed.cutoff());
  return apply_diagonal(apply_diagonal(mixed, i, wi), j, wj);
}

DensityMatrix threshold_measurement(const DensityMatrix& rho, int i, int j, const DetectorModel& det,
                                    ClickPattern pattern) {
  det.validate();
  if (rho.mode_count() < 3) throw std::invalid_argument("threshold_measurement: no modes would remain");
  const auto [first, second] = clicks_of(pattern);
  const double h = 1 / std::sqrt(2.0);
  DensityMatrix mixed = beamsplitter(rho, i, j, h, h);
  const int max_n = mixed.dims()[i] - 1;
  mixed = apply_diagonal(mixed, i, pattern_weights(det, first, max_n));
  mixed = apply_diagonal(mixed, j, pattern_weights(det, second, max_n));
  const std::array<int, 2> measured{i, j};
  return partial_trace(mixed, complement(mixed.mode_count(), measured));
}

}  // namespace ffqkd::fock

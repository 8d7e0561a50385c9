#pragma once

// Truncated Fock-space optics. Pure states are stored sparsely as a map from
// packed occupation tuples to amplitudes; mixed states densely over a
// mixed-radix basis with mode 0 most significant (Kronecker order).
//
// Beamsplitter convention: a1^dag -> t a1^dag + r a2^dag,
//                          a2^dag -> -conj(r) a1^dag + conj(t) a2^dag,
// so |n,0> -> sum_k sqrt(C(n,k)) t^{n-k} r^k |n-k,k>.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ffqkd/bounds.hpp"

namespace ffqkd::fock {

using Complex = std::complex<double>;

inline constexpr int kMaxModes = 10;
inline constexpr int kMaxCutoff = 63;
inline constexpr double kDefaultTruncation = 1e-10;

class StateVector {
 public:
  using Key = std::uint64_t;
  static constexpr int kBits = 6;
  static constexpr Key kMask = (Key{1} << kBits) - 1;

  StateVector(int modes, int cutoff);

  int mode_count() const noexcept { return modes_; }
  int cutoff() const noexcept { return cutoff_; }
  std::size_t size() const noexcept { return terms_.size(); }
  const std::map<Key, Complex>& terms() const noexcept { return terms_; }

  Complex amplitude(std::span<const int> occupation) const;
  /// Adds `amp` to the amplitude stored for the basis vector.
  void add(std::span<const int> occupation, Complex amp);
  void add(Key key, Complex amp);

  /// Squared norm; below 1 for post-selected states.
  double norm_squared() const;

  Key encode(std::span<const int> occupation) const;
  std::vector<int> decode(Key key) const;

  static int occupation(Key key, int mode) noexcept {
    return static_cast<int>((key >> (kBits * mode)) & kMask);
  }
  static Key with_occupation(Key key, int mode, int n) noexcept {
    const auto shift = static_cast<unsigned>(kBits * mode);
    return (key & ~(kMask << shift)) | (static_cast<Key>(n) << shift);
  }

 private:
  friend StateVector with_cutoff(StateVector, int);
  friend StateVector with_extra_modes(StateVector, int);
  int modes_;
  int cutoff_;
  std::map<Key, Complex> terms_;
};

/// Same amplitudes under a new per-mode photon ceiling.
StateVector with_cutoff(StateVector state, int cutoff);
/// Appends `count` vacuum modes.
StateVector with_extra_modes(StateVector state, int count);

StateVector fock_state(std::span<const int> occupation, int cutoff);
StateVector fock_state(std::initializer_list<int> occupation, int cutoff);

/// Two-mode squeezed vacuum sqrt(1-chi^2) sum_n chi^n |n,n>, n <= cutoff.
/// Throws TruncationError when the discarded tail chi^{2(cutoff+1)} exceeds eps.
StateVector tmsv(double chi, int cutoff, double eps = kDefaultTruncation);

/// Smallest cutoff for which tmsv(chi, cutoff, eps) is admissible.
int required_cutoff(double chi, double eps = kDefaultTruncation);

/// Modes of `b` follow those of `a`.
StateVector tensor(const StateVector& a, const StateVector& b);

/// <k, N-k| B(t, r) |n1, n2> for k = 0..N, N = n1 + n2.
std::vector<Complex> beamsplitter_column(int n1, int n2, Complex t, Complex r);

StateVector beamsplitter(const StateVector& state, int i, int j, Complex t, Complex r,
                         double eps = kDefaultTruncation);
inline StateVector balanced_beamsplitter(const StateVector& state, int i, int j) {
  const double h = 1 / std::sqrt(2.0);
  return beamsplitter(state, i, j, h, h);
}

/// Couples `mode` to a fresh vacuum environment mode (appended last) with
/// transmissivity eta. The environment is kept.
StateVector loss_channel(const StateVector& state, int mode, Transmissivity eta,
                         double eps = kDefaultTruncation);

enum class BellSign { Plus, Minus };

struct BellProjection {
  StateVector state;  ///< unnormalised, projected modes removed
  double probability;
};

/// Projects modes (i, j) onto (|01> +- |10>)/sqrt(2).
BellProjection bell_project(const StateVector& state, int i, int j, BellSign sign);

/// Keeps only the component with `n` photons in `mode` and removes the mode.
StateVector project_mode(const StateVector& state, int mode, int n);

/// Multiplies each amplitude by sqrt(weights[n_mode]).
StateVector apply_diagonal(const StateVector& state, int mode, std::span<const double> weights);

/// (-1)^{n_mode}
StateVector phase_flip(const StateVector& state, int mode);

double mean_photon_number(const StateVector& state, int mode);

class DensityMatrix {
 public:
  DensityMatrix(std::vector<int> dims, Eigen::MatrixXcd matrix);

  int mode_count() const noexcept { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const noexcept { return dims_; }
  /// Largest representable occupation over all modes.
  int cutoff() const noexcept;
  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  Eigen::Index dimension() const noexcept { return matrix_.rows(); }

  double trace() const { return matrix_.trace().real(); }
  DensityMatrix normalized() const;

  Eigen::Index index(std::span<const int> occupation) const;
  std::vector<int> occupation(Eigen::Index index) const;

  Complex operator()(std::span<const int> row, std::span<const int> col) const {
    return matrix_(index(row), index(col));
  }

 private:
  std::vector<int> dims_;
  Eigen::MatrixXcd matrix_;
};

DensityMatrix pure_density(const StateVector& state);

/// Traces out every mode not in `keep` (order of `keep` is the output order).
/// Dimensions default to one more than the largest stored occupation.
DensityMatrix partial_trace(const StateVector& state, std::span<const int> keep);
DensityMatrix partial_trace(const StateVector& state, std::span<const int> keep,
                            std::span<const int> dims);
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const int> keep);

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

/// U rho U^dag; the two modes grow to hold every output photon number.
DensityMatrix beamsplitter(const DensityMatrix& rho, int i, int j, Complex t, Complex r);

/// Pure-loss channel on one mode with the environment traced out.
DensityMatrix loss_channel(const DensityMatrix& rho, int mode, Transmissivity eta);

/// sqrt(w) rho sqrt(w) for a weight diagonal in the occupation of `mode`.
DensityMatrix apply_diagonal(const DensityMatrix& rho, int mode, std::span<const double> weights);
DensityMatrix phase_flip(const DensityMatrix& rho, int mode);

double mean_photon_number(const DensityMatrix& rho, int mode);

/// Von Neumann entropy in bits. Requires unit trace (1e-8) and eigenvalues
/// above -1e-10; otherwise NumericError.
double entropy(const DensityMatrix& rho);

/// Reverse coherent information S(rest) - S(joint), where `decoder_modes`
/// are traced out to form the marginal.
double rci(const DensityMatrix& joint, std::span<const int> decoder_modes);
/// Coherent information in the forward direction: S(decoder) - S(joint).
double coherent_information(const DensityMatrix& joint, std::span<const int> decoder_modes);

/// <psi|rho|psi> / <psi|psi> for a pure target over the same modes.
double fidelity(const DensityMatrix& rho, const StateVector& target);
double fidelity(const StateVector& a, const StateVector& b);

/// Smallest eigenvalue and Hermiticity defect, for invariant checks.
struct PhysicalityReport {
  double min_eigenvalue;
  double hermitian_defect;
  double trace;
};
PhysicalityReport physicality(const DensityMatrix& rho);

/// Threshold (click / no-click) detector with efficiency and per-gate dark
/// click probability. No-click element (1 - p_dark)(1 - eff)^n.
struct DetectorModel {
  double efficiency = 1.0;
  double dark_click_prob = 0.0;

  static DetectorModel ideal() { return {}; }
  void validate() const;
  double no_click(int n) const;
  double click(int n) const { return 1.0 - no_click(n); }
  std::vector<double> no_click_weights(int max_n) const;
  std::vector<double> click_weights(int max_n) const;
};

/// Which detector(s) behind the balanced beamsplitter fire.
enum class ClickPattern { None, FirstOnly, SecondOnly, Both };

/// Balanced beamsplitter on (i, j) followed by the POVM element for
/// `pattern`. The measured modes stay in the state as classical records.
StateVector threshold_measurement(const StateVector& state, int i, int j, const DetectorModel& det,
                                  ClickPattern pattern);

/// Same on a density matrix; measured modes are traced out.
DensityMatrix threshold_measurement(const DensityMatrix& rho, int i, int j, const DetectorModel& det,
                                    ClickPattern pattern);

}  // namespace ffqkd::fock

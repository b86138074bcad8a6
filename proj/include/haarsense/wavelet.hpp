#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "haarsense/signals.hpp"

namespace haarsense {

/// Position (order i, shift j) of one step-wavelet basis function.
struct DyadicIndex {
  int order = 1;   // i >= 1
  int shift = 0;   // 0 <= j <= 2^(i-1) - 1

  /// Throws std::invalid_argument when the shift is outside its order's range.
  DyadicIndex(int order, int shift);

  /// Number of shifts at this order, 2^(i-1).
  long long shifts_at_order() const { return 1LL << (order - 1); }
};

/// One measured coefficient: value plus one-sigma uncertainty, microtesla.
struct CoefficientEntry {
  double value_uT = 0.0;
  double sigma_uT = 0.0;
};

/// Mean c0 plus per-order coefficient levels; level i holds 2^(i-1) entries.
struct HaarCoefficients {
  CoefficientEntry mean;                             // c0
  std::vector<std::vector<CoefficientEntry>> levels; // levels[i-1] = order i
  int max_order = 0;

  static HaarCoefficients zeros(int max_order);

  /// Throws std::invalid_argument when level sizes or sigmas are inconsistent.
  void validate() const;

  const CoefficientEntry& at(const DyadicIndex& idx) const;
  CoefficientEntry& at(const DyadicIndex& idx);
};

/// Sequency-ordered spectrum: coefficients[m] has m sign changes; index 0 is
/// the signal mean. Sigmas are optional (empty means exact/noiseless).
struct WalshSpectrum {
  std::vector<double> coefficients_uT;
  std::vector<double> sigmas_uT;
  int order = 0;

  /// Throws std::invalid_argument unless coefficients has exactly 2^order
  /// entries and sigmas is empty or the same length.
  WalshSpectrum(std::vector<double> coefficients, int order,
                std::vector<double> sigmas = {});
};

/// Reconstructed waveform: 2^n piecewise-constant values at dyadic bin
/// centers with per-point one-sigma uncertainties.
struct Reconstruction {
  std::vector<double> points_uT;
  std::vector<double> sigmas_uT;
  int order = 0;
  std::string provenance;  // protocol kind / repetitions, free-form
};

/// Step wavelet h_i^j evaluated at x in [0,1); +2^((i-1)/2) on the left half
/// of its support, the negative on the right half, 0 elsewhere.
/// Throws std::domain_error for x outside [0,1).
double haar_eval(const DyadicIndex& idx, double x);

/// Midpoint-rule projection of the rescaled signal (x = t/T) onto the basis
/// up to order n. c0 is the signal mean; all sigmas are zero.
/// Throws ResolutionError when the grid puts < 1 sample in the finest
/// half-interval (recommended >= 64).
HaarCoefficients haar_transform(const SampledSignal& signal, int n);

/// Partial sum S_n(x) = c0 + sum_{i<=n} sum_j c_i^j h_i^j(x).
/// Throws std::out_of_range when n exceeds coeffs.max_order.
double haar_partial_sum(const HaarCoefficients& coeffs, int n, double x);

/// S_n sampled at the 2^n dyadic bin centers, with per-point sigma from
/// independent-coefficient propagation:
/// var(point) = sigma(c0)^2 + sum (h_i^j(x_k))^2 sigma(c_i^j)^2.
Reconstruction haar_reconstruct_points(const HaarCoefficients& coeffs, int n);

/// Sequency-ordered Walsh function w_m(x), m >= 0, x in [0,1).
/// w_0 == +1; w_1 is the sign pattern of h_1^0. Built as the product of
/// Rademacher functions selected by the Gray code of m.
int walsh_eval(long long m, double x);

/// Midpoint-rule projection onto the first 2^n sequency-ordered Walsh
/// functions. Same grid requirement as haar_transform.
WalshSpectrum walsh_transform(const SampledSignal& signal, int n);

/// Block values at the 2^n dyadic bin centers implied by the spectrum.
std::vector<double> walsh_inverse(const WalshSpectrum& spectrum);

}  // namespace haarsense

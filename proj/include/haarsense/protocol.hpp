#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "haarsense/spinsim.hpp"
#include "haarsense/wavelet.hpp"

namespace haarsense {

enum class ProtocolKind { Haar, Walsh, Ramsey, SparseHaar };

/// Coefficient-from-phase conventions. `Integral` is the constant forced by
/// the coefficient integral and the echo filter, c = 2^{-(i-1)/2} phi /
/// (gamma tau_i); `PaperConstant` multiplies that by pi/2.
enum class CoefficientConvention { Integral, PaperConstant };

std::string to_string(ProtocolKind kind);
std::string to_string(CoefficientConvention convention);

/// Ordered echo layout for one sweep of the temporal signal.
struct ProtocolPlan {
  ProtocolKind kind = ProtocolKind::Haar;
  int order = 1;                       // n (0 for Ramsey)
  long long points = 0;                // Ramsey point count N (0 otherwise)
  /// Measurement windows grouped by signal run. For Ramsey these are
  /// free-precession intervals; for Walsh each run holds one full-length
  /// sequence, recorded here as a single [0, T) window.
  std::vector<std::vector<EchoSequence>> runs;
  std::uint64_t repetitions = 1;
  double overhead_us = 0.0;            // t_o per measurement
  double duration_us = 0.0;            // T
  bool includes_mean_run = false;      // one extra run reserved for c0
};

/// Signal-run accounting for a plan.
struct RunBudget {
  long long signal_runs_per_sweep = 0;
  long long total_runs = 0;            // runs_per_sweep * M
  double wall_estimate_s = 0.0;        // total_runs * (T + t_o)
};

/// Detected sparse events on a reconstruction.
struct DetectedEvent {
  std::size_t bin = 0;
  int polarity = +1;
  double magnitude_uT = 0.0;
};

struct EventDetection {
  std::vector<DetectedEvent> events;
  double threshold_sigma = 0.0;
};

/// Execution knobs shared by the protocol runners.
///
/// `noiseless` replaces photon counting with exact contrast inversion (the
/// M -> infinity limit); `threads` may parallelize independent measurements,
/// with results bitwise identical to sequential execution because every
/// measurement owns a derived seed (see derive_stream_seed).
struct RunOptions {
  std::uint64_t repetitions = 1;
  std::uint64_t seed = 0;
  bool noiseless = false;
  CoefficientConvention convention = CoefficientConvention::Integral;
  double overhead_us = 0.0;
  int threads = 1;
  /// Supply c0 externally instead of measuring it (value, sigma) in microtesla.
  std::optional<std::pair<double, double>> external_mean;
};

/// Echo layout for orders 1..n plus one run for c0.
///
/// Order i uses 2^(i-1) contiguous echoes of tau_i = T / 2^(i-1) and packs
/// ceil(2^(i-1) (tau_i + t_o) / T) signal runs; the single order-1 echo spans
/// the whole run, so its readout trails into the inter-run gap and order 1
/// always costs exactly one run. Throws PackingError when tau_i + t_o > T
/// for a multi-echo order.
ProtocolPlan plan_haar(int n, double duration_us, std::uint64_t repetitions,
                       double overhead_us);

/// Like plan_haar restricted to the listed orders, without the c0 run.
ProtocolPlan plan_sparse_haar(const std::set<int>& orders, double duration_us,
                              std::uint64_t repetitions, double overhead_us);

/// One full-length decoupling sequence per Walsh coefficient: 2^n runs.
ProtocolPlan plan_walsh(int n, double duration_us, std::uint64_t repetitions,
                        double overhead_us);

/// N successive free-precession intervals of tau = T/N.
ProtocolPlan plan_ramsey(long long points, double duration_us, std::uint64_t repetitions,
                         double overhead_us);

/// Totals for a plan; wall estimate uses T + t_o per run.
RunBudget run_budget(const ProtocolPlan& plan);

/// Convert an echo phase into a Haar coefficient, microtesla.
double phase_to_coefficient(double phi, int order, double tau_us,
                            double gamma_rad_per_s_per_t,
                            CoefficientConvention convention = CoefficientConvention::Integral);

/// Measure every (i, j) up to order n with spin echoes plus one
/// free-precession run for c0; phases become coefficients with propagated
/// uncertainties. Deterministic per seed; propagates PhaseWrapError (with
/// the offending index named) and PackingError.
HaarCoefficients run_haar_protocol(const SampledSignal& signal, const SensorParams& params,
                                   int n, const RunOptions& options);

/// Measure only the listed orders; c0 is fixed to zero. Unmeasured levels
/// are stored as exact zeros so reconstruction uses just the sensed band.
HaarCoefficients run_sparse_haar(const SampledSignal& signal, const SensorParams& params,
                                 const std::set<int>& orders, const RunOptions& options);

struct WalshProtocolResult {
  WalshSpectrum spectrum;
  RunBudget budget;
};

/// Walsh comparison path: one multi-pulse sequence per coefficient, sign
/// flips at the Walsh function's sign changes (m pi pulses for sequency m).
WalshProtocolResult run_walsh_protocol(const SampledSignal& signal, const SensorParams& params,
                                       int n, const RunOptions& options);

/// Sequential free-precession amplitude measurements over N intervals.
/// Emits a provenance warning when tau = T/N is more than
/// `tau_t2star_warn_factor` away from T2*.
Reconstruction run_ramsey_protocol(const SampledSignal& signal, const SensorParams& params,
                                   long long points, const RunOptions& options,
                                   double tau_t2star_warn_factor = 10.0);

/// Reconstruction with uncertainties from measured coefficients at order n.
Reconstruction reconstruct(const HaarCoefficients& coeffs, int n,
                           const std::string& provenance = {});

/// Reconstruction from a Walsh spectrum (uniform per-point sigma).
Reconstruction reconstruct_walsh(const WalshSpectrum& spectrum,
                                 const std::string& provenance = {});

/// Threshold the reconstruction at threshold_sigma * sigma per bin, merge
/// adjacent above-threshold bins into one event and report the peak bin with
/// its polarity. Equal-magnitude peaks resolve to the lower bin index.
/// Throws std::invalid_argument unless every sigma is positive.
EventDetection detect_events(const Reconstruction& recon, double threshold_sigma);

}  // namespace haarsense

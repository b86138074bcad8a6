#pragma once

#include <cstdint>
#include <vector>

#include "haarsense/signals.hpp"

namespace haarsense {

/// Two-level spin sensor parameters. Times are microseconds, gamma is
/// rad s^-1 T^-1, photon rates are mean detected photons per readout.
struct SensorParams {
  double gamma_rad_per_s_per_t = 1.7608596e11;  // electron gyromagnetic ratio
  double t2_us = 300.0;
  double t2_star_us = 3.0;
  double contrast_amplitude = 0.3;       // C0, in (0, 1]
  double photons_bright = 0.03;          // lambda_b
  double photons_dark = 0.02;            // lambda_d, < lambda_b
  double decoherence_exponent = 3.0;     // p in exp(-(tau/T2)^p)
  double ramsey_exponent = 2.0;          // p* in exp(-(tau/T2*)^p*)
  double pi_pulse_contrast = 1.0;        // per-pi-pulse contrast multiplier

  /// Throws std::invalid_argument on violated invariants
  /// (t2 > t2* > 0, gamma > 0, lambda_b > lambda_d >= 0, C0 in (0,1], p >= 1).
  void validate() const;

  /// Echo decoherence envelope exp(-(tau/T2)^p).
  double echo_envelope(double tau_us) const;
  /// Free-precession envelope exp(-(tau/T2*)^p*).
  double ramsey_envelope(double tau_us) const;
  /// Contrast amplitude after n_pi imperfect pi pulses.
  double effective_amplitude(int pi_pulses) const;
};

/// Spin echo window: filter +1 on [start, start+tau/2), -1 on
/// [start+tau/2, start+tau), 0 outside. Pulses are idealized as zero-width.
struct EchoSequence {
  double start_us = 0.0;
  double tau_us = 1.0;

  EchoSequence(double start_us, double tau_us);
  double mid_us() const { return start_us + 0.5 * tau_us; }
  double end_us() const { return start_us + tau_us; }
};

/// Aggregated photon counts from M repetitions of one measurement.
struct MeasurementOutcome {
  std::uint64_t repetitions = 1;
  std::uint64_t signal_counts = 0;
  std::uint64_t reference_bright_counts = 0;
  std::uint64_t reference_dark_counts = 0;
};

struct PhaseEstimate {
  double phi_rad = 0.0;
  double sigma_rad = 0.0;
};

/// Contrast-versus-amplitude reference sweep with its sinusoid fit.
struct CalibrationCurve {
  std::vector<double> amplitudes_uT;
  std::vector<double> contrasts;
  double fit_scale = 0.0;        // a in a*sin(b*A) + c
  double fit_rad_per_uT = 0.0;   // b
  double fit_offset = 0.0;       // c
  double fit_residual_rms = 0.0;
};

/// Echo filter value at time t: -1, 0 or +1.
int filter_function(const EchoSequence& seq, double t_us);

/// phi = gamma * integral b(t) * filter(t) dt by midpoint quadrature on the
/// signal grid (b in microtesla, t in microseconds; unit conversion handled
/// internally). Throws ResolutionError with fewer than 2 samples per
/// half-window and std::invalid_argument when the echo leaves the signal.
double accumulate_phase(const SampledSignal& signal, const EchoSequence& seq,
                        double gamma_rad_per_s_per_t);

/// Phase accumulated with the trivial +1 filter over [start, start+tau)
/// (free precession; used for c0, the Ramsey points and m = 0 Walsh).
double accumulate_phase_free(const SampledSignal& signal, double start_us,
                             double tau_us, double gamma_rad_per_s_per_t);

/// Phase accumulated under an arbitrary +-1 filter given as a sign function
/// of normalized time x = t/T (Walsh decoupling sequences).
double accumulate_phase_signed(const SampledSignal& signal,
                               const std::vector<int>& sign_per_sample,
                               double gamma_rad_per_s_per_t);

/// Echo readout contrast C = C0 * sin(phi) * exp(-(tau/T2)^p) (times the
/// pi-pulse loss factor). Sign-sensitive: the projective pi/2 pulses are on
/// different axes.
double contrast_of_phase(double phi, double tau_us, const SensorParams& params);

/// Simulate M photon-counting repetitions of a spin echo at true phase phi.
///
/// Bright-state probability p0 = (1 + C_eff * sin(phi) * envelope)/2; mean
/// photons per repetition lambda = lambda_d + (lambda_b - lambda_d) * p0.
/// Counts are Poisson; the references are taken at p0 = 1 and p0 = 0.
/// Deterministic for fixed seed.
MeasurementOutcome simulate_readout(double phi, double tau_us, const SensorParams& params,
                                    std::uint64_t repetitions, std::uint64_t seed);

/// Same photon model with an explicit decoherence envelope and pi-pulse
/// count (Ramsey and Walsh sequences reuse this).
MeasurementOutcome simulate_readout_env(double phi, double envelope, int pi_pulses,
                                        const SensorParams& params,
                                        std::uint64_t repetitions, std::uint64_t seed);

/// Estimate phase and uncertainty from echo photon counts.
///
/// Contrast estimate (2S - B - D)/(B - D); variance by first-order
/// propagation of Poisson count noise; inversion through
/// phi = arcsin(contrast / (C_eff * envelope)).
/// Throws DegenerateReferenceError when the references do not separate
/// (B <= D) and PhaseWrapError when the normalized contrast exceeds 1
/// beyond noise (|phi| >= pi/2 is ambiguous).
PhaseEstimate estimate_phase(const MeasurementOutcome& outcome, double tau_us,
                             const SensorParams& params);

/// estimate_phase with an explicit envelope / pi-pulse count.
PhaseEstimate estimate_phase_env(const MeasurementOutcome& outcome, double envelope,
                                 int pi_pulses, const SensorParams& params);

/// Arcsine inversion of a contrast value that is already in hand (noiseless
/// protocol path enters here with sigma 0).
PhaseEstimate estimate_phase_from_contrast(double contrast, double contrast_sigma,
                                           double envelope, int pi_pulses,
                                           const SensorParams& params);

/// Sweep in-phase sinusoid amplitudes through an echo of length tau and fit
/// the measured contrast to a*sin(b*A) + c by damped Gauss-Newton.
/// With repetitions == 0 the sweep is noiseless. Needs >= 5 amplitudes.
CalibrationCurve calibrate(const SensorParams& params, double tau_us,
                           const std::vector<double>& amplitude_grid_uT,
                           std::uint64_t repetitions, std::uint64_t seed);

}  // namespace haarsense

#include "haarsense/spinsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "haarsense/errors.hpp"
#include "haarsense/rng.hpp"

namespace haarsense {

namespace {

// microtesla * microsecond -> tesla * second
constexpr double kMicroSquared = 1e-12;

}  // namespace

void SensorParams::validate() const {
  if (!(gamma_rad_per_s_per_t > 0.0)) {
    throw std::invalid_argument("gamma must be positive");
  }
  if (!(t2_us > t2_star_us) || !(t2_star_us > 0.0)) {
    throw std::invalid_argument("need t2 > t2* > 0");
  }
  if (!(contrast_amplitude > 0.0) || contrast_amplitude > 1.0) {
    throw std::invalid_argument("contrast amplitude must lie in (0, 1]");
  }
  if (!(photons_bright > photons_dark) || photons_dark < 0.0) {
    throw std::invalid_argument("need photons_bright > photons_dark >= 0");
  }
  if (decoherence_exponent < 1.0 || ramsey_exponent < 1.0) {
    throw std::invalid_argument("decoherence exponents must be >= 1");
  }
  if (pi_pulse_contrast <= 0.0 || pi_pulse_contrast > 1.0) {
    throw std::invalid_argument("pi-pulse contrast multiplier must lie in (0, 1]");
  }
}

double SensorParams::echo_envelope(double tau_us) const {
  return std::exp(-std::pow(tau_us / t2_us, decoherence_exponent));
}

double SensorParams::ramsey_envelope(double tau_us) const {
  return std::exp(-std::pow(tau_us / t2_star_us, ramsey_exponent));
}

double SensorParams::effective_amplitude(int pi_pulses) const {
  double amp = contrast_amplitude;
  for (int k = 0; k < pi_pulses; ++k) amp *= pi_pulse_contrast;
  return amp;
}

EchoSequence::EchoSequence(double start_us, double tau_us)
    : start_us(start_us), tau_us(tau_us) {
  if (start_us < 0.0) {
    throw std::invalid_argument("echo start must be >= 0");
  }
  if (!(tau_us > 0.0)) {
    throw std::invalid_argument("echo tau must be positive");
  }
}

int filter_function(const EchoSequence& seq, double t_us) {
  if (t_us < seq.start_us || t_us >= seq.end_us()) return 0;
  return t_us < seq.mid_us() ? +1 : -1;
}

double accumulate_phase(const SampledSignal& signal, const EchoSequence& seq,
                        double gamma_rad_per_s_per_t) {
  const double dt = signal.dt_us();
  if (seq.end_us() > signal.duration_us * (1.0 + 1e-12)) {
    throw std::invalid_argument("echo sequence leaves the signal support");
  }
  if (seq.tau_us / 2.0 < 2.0 * dt) {
    throw ResolutionError("need >= 2 samples per echo half-window");
  }
  const auto count = signal.sample_count();
  auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(seq.start_us / dt)));
  auto hi = static_cast<std::size_t>(std::ceil(seq.end_us() / dt));
  hi = std::min(hi, count);
  double acc = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    const int sign = filter_function(seq, signal.time_at(k));
    if (sign != 0) acc += static_cast<double>(sign) * signal.samples[k];
  }
  return gamma_rad_per_s_per_t * acc * dt * kMicroSquared;
}

double accumulate_phase_free(const SampledSignal& signal, double start_us,
                             double tau_us, double gamma_rad_per_s_per_t) {
  const double dt = signal.dt_us();
  if (start_us < 0.0 || start_us + tau_us > signal.duration_us * (1.0 + 1e-12)) {
    throw std::invalid_argument("free-precession window leaves the signal support");
  }
  if (tau_us < 2.0 * dt) {
    throw ResolutionError("need >= 2 samples per free-precession window");
  }
  const auto count = signal.sample_count();
  auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(start_us / dt)));
  auto hi = static_cast<std::size_t>(std::ceil((start_us + tau_us) / dt));
  hi = std::min(hi, count);
  double acc = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    const double t = signal.time_at(k);
    if (t >= start_us && t < start_us + tau_us) acc += signal.samples[k];
  }
  return gamma_rad_per_s_per_t * acc * dt * kMicroSquared;
}

double accumulate_phase_signed(const SampledSignal& signal,
                               const std::vector<int>& sign_per_sample,
                               double gamma_rad_per_s_per_t) {
  if (sign_per_sample.size() != signal.sample_count()) {
    throw std::invalid_argument("sign vector length must match the sample grid");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < sign_per_sample.size(); ++k) {
    acc += static_cast<double>(sign_per_sample[k]) * signal.samples[k];
  }
  return gamma_rad_per_s_per_t * acc * signal.dt_us() * kMicroSquared;
}

double contrast_of_phase(double phi, double tau_us, const SensorParams& params) {
  if (!(tau_us > 0.0)) {
    throw std::invalid_argument("tau must be positive");
  }
  return params.effective_amplitude(1) * std::sin(phi) * params.echo_envelope(tau_us);
}

MeasurementOutcome simulate_readout_env(double phi, double envelope, int pi_pulses,
                                        const SensorParams& params,
                                        std::uint64_t repetitions, std::uint64_t seed) {
  if (repetitions < 1) {
    throw std::invalid_argument("repetitions must be >= 1");
  }
  const double amp = params.effective_amplitude(pi_pulses);
  const double p0 = 0.5 * (1.0 + amp * std::sin(phi) * envelope);
  const double lambda_signal =
      params.photons_dark + (params.photons_bright - params.photons_dark) * p0;
  const double m = static_cast<double>(repetitions);

  // Draw order is part of the determinism contract: signal, bright, dark.
  Rng rng(seed);
  MeasurementOutcome out;
  out.repetitions = repetitions;
  out.signal_counts = rng.poisson(m * lambda_signal);
  out.reference_bright_counts = rng.poisson(m * params.photons_bright);
  out.reference_dark_counts = rng.poisson(m * params.photons_dark);
  return out;
}

MeasurementOutcome simulate_readout(double phi, double tau_us, const SensorParams& params,
                                    std::uint64_t repetitions, std::uint64_t seed) {
  return simulate_readout_env(phi, params.echo_envelope(tau_us), 1, params, repetitions, seed);
}

PhaseEstimate estimate_phase_from_contrast(double contrast, double contrast_sigma,
                                           double envelope, int pi_pulses,
                                           const SensorParams& params) {
  const double amp = params.effective_amplitude(pi_pulses) * envelope;
  if (!(amp > 0.0)) {
    throw DegenerateReferenceError("reference response underflowed to zero");
  }
  const double u = contrast / amp;
  const double sigma_u = contrast_sigma / amp;
  const double wrap_tolerance = std::max(3.0 * sigma_u, 1e-9);
  if (std::abs(u) > 1.0 + wrap_tolerance) {
    throw PhaseWrapError("normalized contrast " + std::to_string(u) +
                         " exceeds 1; |phi| >= pi/2 is ambiguous");
  }
  const double clamped = std::clamp(u, -1.0, 1.0);
  PhaseEstimate est;
  est.phi_rad = std::asin(clamped);
  const double safe = std::min(std::abs(clamped), 1.0 - 1e-12);
  est.sigma_rad = sigma_u / std::sqrt(1.0 - safe * safe);
  return est;
}

PhaseEstimate estimate_phase_env(const MeasurementOutcome& outcome, double envelope,
                                 int pi_pulses, const SensorParams& params) {
  const double s = static_cast<double>(outcome.signal_counts);
  const double b = static_cast<double>(outcome.reference_bright_counts);
  const double d = static_cast<double>(outcome.reference_dark_counts);
  if (!(b > d)) {
    throw DegenerateReferenceError("bright/dark references do not separate");
  }
  const double span = b - d;
  const double p0 = (s - d) / span;
  const double contrast = 2.0 * p0 - 1.0;

  // First-order propagation of Poisson variance (plug-in: var ~ counts).
  const double dp_ds = 1.0 / span;
  const double dp_db = -(s - d) / (span * span);
  const double dp_dd = (s - b) / (span * span);
  const double var_p0 = s * dp_ds * dp_ds + b * dp_db * dp_db + d * dp_dd * dp_dd;
  const double contrast_sigma = 2.0 * std::sqrt(var_p0);

  return estimate_phase_from_contrast(contrast, contrast_sigma, envelope, pi_pulses, params);
}

PhaseEstimate estimate_phase(const MeasurementOutcome& outcome, double tau_us,
                             const SensorParams& params) {
  return estimate_phase_env(outcome, params.echo_envelope(tau_us), 1, params);
}

namespace {

struct SinusoidFit {
  double scale = 0.0;
  double rate = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
};

// Damped Gauss-Newton for y = a sin(b x) + c. The physics supplies a good
// starting rate, so a handful of iterations converges.
SinusoidFit fit_sinusoid(const std::vector<double>& x, const std::vector<double>& y,
                         double a0, double b0, double c0) {
  const std::size_t n = x.size();
  double a = a0, b = b0, c = c0;
  double lambda = 1e-3;

  auto sum_sq_residual = [&](double pa, double pb, double pc) {
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = y[k] - (pa * std::sin(pb * x[k]) + pc);
      ss += r * r;
    }
    return ss;
  };

  double ss = sum_sq_residual(a, b, c);
  for (int iter = 0; iter < 200; ++iter) {
    // Normal equations J^T J delta = J^T r for the 3 parameters.
    double jtj[3][3] = {};
    double jtr[3] = {};
    for (std::size_t k = 0; k < n; ++k) {
      const double s = std::sin(b * x[k]);
      const double j0 = s;
      const double j1 = a * x[k] * std::cos(b * x[k]);
      const double j2 = 1.0;
      const double r = y[k] - (a * s + c);
      const double row[3] = {j0, j1, j2};
      for (int p = 0; p < 3; ++p) {
        jtr[p] += row[p] * r;
        for (int q = 0; q < 3; ++q) jtj[p][q] += row[p] * row[q];
      }
    }
    for (int p = 0; p < 3; ++p) jtj[p][p] *= 1.0 + lambda;

    // 3x3 solve by Cramer's rule.
    const double det = jtj[0][0] * (jtj[1][1] * jtj[2][2] - jtj[1][2] * jtj[2][1]) -
                       jtj[0][1] * (jtj[1][0] * jtj[2][2] - jtj[1][2] * jtj[2][0]) +
                       jtj[0][2] * (jtj[1][0] * jtj[2][1] - jtj[1][1] * jtj[2][0]);
    if (det == 0.0 || !std::isfinite(det)) break;
    auto solve_col = [&](int col) {
      double m[3][3];
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q) m[p][q] = (q == col) ? jtr[p] : jtj[p][q];
      return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
              m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
              m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
             det;
    };
    const double da = solve_col(0);
    const double db = solve_col(1);
    const double dc = solve_col(2);

    const double ss_new = sum_sq_residual(a + da, b + db, c + dc);
    if (ss_new < ss) {
      a += da;
      b += db;
      c += dc;
      lambda = std::max(lambda * 0.3, 1e-12);
      const bool converged = std::abs(da) + std::abs(db) + std::abs(dc) <
                             1e-14 * (std::abs(a) + std::abs(b) + std::abs(c) + 1.0);
      ss = ss_new;
      if (converged) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }

  SinusoidFit fit;
  fit.scale = a;
  fit.rate = b;
  fit.offset = c;
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  return fit;
}

}  // namespace

CalibrationCurve calibrate(const SensorParams& params, double tau_us,
                           const std::vector<double>& amplitude_grid_uT,
                           std::uint64_t repetitions, std::uint64_t seed) {
  params.validate();
  if (!(tau_us > 0.0)) {
    throw std::invalid_argument("tau must be positive");
  }
  if (amplitude_grid_uT.size() < 5) {
    throw std::invalid_argument("calibration needs at least 5 amplitudes");
  }

  constexpr std::size_t kGrid = 4096;
  const EchoSequence echo(0.0, tau_us);
  const double envelope = params.echo_envelope(tau_us);

  CalibrationCurve curve;
  curve.amplitudes_uT = amplitude_grid_uT;
  curve.contrasts.reserve(amplitude_grid_uT.size());
  for (std::size_t a = 0; a < amplitude_grid_uT.size(); ++a) {
    const SampledSignal signal =
        generate(Sinusoid{amplitude_grid_uT[a], tau_us, 0.0}, tau_us, kGrid);
    const double phi = accumulate_phase(signal, echo, params.gamma_rad_per_s_per_t);
    if (repetitions == 0) {
      curve.contrasts.push_back(params.effective_amplitude(1) * std::sin(phi) * envelope);
    } else {
      const MeasurementOutcome outcome = simulate_readout(
          phi, tau_us, params, repetitions, derive_stream_seed(seed, a));
      const double s = static_cast<double>(outcome.signal_counts);
      const double b = static_cast<double>(outcome.reference_bright_counts);
      const double d = static_cast<double>(outcome.reference_dark_counts);
      if (!(b > d)) {
        throw DegenerateReferenceError("bright/dark references do not separate");
      }
      curve.contrasts.push_back(2.0 * (s - d) / (b - d) - 1.0);
    }
  }

  // Expected small-amplitude rate: phi = 2 gamma A tau / pi.
  const double rate0 =
      2.0 * params.gamma_rad_per_s_per_t * tau_us * kMicroSquared / M_PI;
  double lo = curve.contrasts[0], hi = curve.contrasts[0], mean = 0.0;
  for (double v : curve.contrasts) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= static_cast<double>(curve.contrasts.size());
  const double scale0 = std::max(0.5 * (hi - lo), 1e-6);

  const SinusoidFit fit =
      fit_sinusoid(curve.amplitudes_uT, curve.contrasts, scale0, rate0, mean);
  if (!std::isfinite(fit.scale) || !std::isfinite(fit.rate) || !std::isfinite(fit.offset)) {
    throw std::runtime_error("calibration fit did not converge (residual rms " +
                             std::to_string(fit.residual_rms) + ")");
  }
  curve.fit_scale = fit.scale;
  curve.fit_rad_per_uT = fit.rate;
  curve.fit_offset = fit.offset;
  curve.fit_residual_rms = fit.residual_rms;
  return curve;
}

}  // namespace haarsense

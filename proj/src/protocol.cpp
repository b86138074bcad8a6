#include "haarsense/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "haarsense/errors.hpp"
#include "haarsense/rng.hpp"

namespace haarsense {

namespace {

constexpr double kMicroSquared = 1e-12;

double dyadic_inv_amplitude(int order) {
  const int k = order - 1;
  return (k % 2 == 0) ? std::ldexp(1.0, -k / 2)
                      : std::ldexp(1.0 / std::numbers::sqrt2, -(k - 1) / 2);
}

// Stream ids: 0 is the mean (c0); wavelet (i, j) maps to 2^(i-1) + j, which
// is unique and identical between full and sparse runs, so a sparse sweep
// reproduces the exact sub-stream a full sweep would use.
std::uint64_t stream_id_for(int order, long long shift) {
  return (1ULL << (order - 1)) + static_cast<std::uint64_t>(shift);
}

// Greedy slot packing of one order's echoes into signal runs. Echoes of
// order i sit at start = j * tau; after each measurement the sensor is busy
// for overhead_us, so later echo slots in the same run may have to be
// skipped and picked up in a fresh run.
std::vector<std::vector<EchoSequence>> pack_order(long long echo_count, double tau_us,
                                                  double duration_us, double overhead_us) {
  std::vector<std::vector<EchoSequence>> runs;
  if (echo_count == 1) {
    // A single window spans the run; its readout trails into the inter-run
    // gap and costs nothing extra.
    runs.push_back({EchoSequence(0.0, tau_us)});
    return runs;
  }
  if (tau_us + overhead_us > duration_us * (1.0 + 1e-12)) {
    throw PackingError("echo of tau = " + std::to_string(tau_us) +
                       " us plus overhead does not fit one signal run");
  }
  std::vector<bool> scheduled(static_cast<std::size_t>(echo_count), false);
  long long remaining = echo_count;
  while (remaining > 0) {
    std::vector<EchoSequence> run;
    double busy_until = 0.0;
    for (long long j = 0; j < echo_count; ++j) {
      if (scheduled[static_cast<std::size_t>(j)]) continue;
      const double start = static_cast<double>(j) * tau_us;
      if (start + 1e-12 * duration_us >= busy_until) {
        run.emplace_back(start, tau_us);
        scheduled[static_cast<std::size_t>(j)] = true;
        --remaining;
        busy_until = start + tau_us + overhead_us;
      }
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

void check_plan_inputs(double duration_us, std::uint64_t repetitions, double overhead_us) {
  if (!(duration_us > 0.0)) {
    throw std::invalid_argument("duration must be positive");
  }
  if (repetitions < 1) {
    throw std::invalid_argument("repetitions must be >= 1");
  }
  if (overhead_us < 0.0) {
    throw std::invalid_argument("overhead must be >= 0");
  }
}

// Run fn(index) for every index, optionally across threads. Each index only
// touches its own output slot, so any schedule gives identical results; the
// first exception wins and is rethrown on the caller thread.
template <typename Fn>
void run_tasks(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  const int workers = std::min<int>(threads, static_cast<int>(count));
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t k = static_cast<std::size_t>(w); k < count;
           k += static_cast<std::size_t>(workers)) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct MeasuredValue {
  double value = 0.0;
  double sigma = 0.0;
};

// One simulated (or noiseless) phase measurement, converted by `to_field`
// which must be linear (sigma converts with the same factor).
MeasuredValue measure_phase(double phi_true, double envelope, int pi_pulses,
                            const SensorParams& params, const RunOptions& options,
                            std::uint64_t stream_id) {
  PhaseEstimate est;
  if (options.noiseless) {
    const double contrast =
        params.effective_amplitude(pi_pulses) * std::sin(phi_true) * envelope;
    est = estimate_phase_from_contrast(contrast, 0.0, envelope, pi_pulses, params);
  } else {
    const MeasurementOutcome outcome =
        simulate_readout_env(phi_true, envelope, pi_pulses, params, options.repetitions,
                             derive_stream_seed(options.seed, stream_id));
    est = estimate_phase_env(outcome, envelope, pi_pulses, params);
  }
  return {est.phi_rad, est.sigma_rad};
}

std::string provenance_string(ProtocolKind kind, const RunOptions& options) {
  std::string p = to_string(kind);
  p += options.noiseless ? " noiseless" : " M=" + std::to_string(options.repetitions);
  p += " seed=" + std::to_string(options.seed);
  p += " convention=" + to_string(options.convention);
  return p;
}

}  // namespace

std::string to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::Haar: return "haar";
    case ProtocolKind::Walsh: return "walsh";
    case ProtocolKind::Ramsey: return "ramsey";
    case ProtocolKind::SparseHaar: return "sparse_haar";
  }
  return "unknown";
}

std::string to_string(CoefficientConvention convention) {
  return convention == CoefficientConvention::Integral ? "integral" : "paper";
}

ProtocolPlan plan_haar(int n, double duration_us, std::uint64_t repetitions,
                       double overhead_us) {
  if (n < 1 || n > 30) {
    throw std::invalid_argument("order must lie in [1, 30]");
  }
  check_plan_inputs(duration_us, repetitions, overhead_us);
  ProtocolPlan plan;
  plan.kind = ProtocolKind::Haar;
  plan.order = n;
  plan.repetitions = repetitions;
  plan.overhead_us = overhead_us;
  plan.duration_us = duration_us;
  plan.includes_mean_run = true;
  plan.runs.push_back({});  // c0: one free-precession run, no echo windows
  for (int i = 1; i <= n; ++i) {
    const long long echoes = 1LL << (i - 1);
    const double tau = duration_us / static_cast<double>(echoes);
    try {
      auto order_runs = pack_order(echoes, tau, duration_us, overhead_us);
      for (auto& r : order_runs) plan.runs.push_back(std::move(r));
    } catch (const PackingError& e) {
      throw PackingError("order " + std::to_string(i) + ": " + e.what());
    }
  }
  return plan;
}

ProtocolPlan plan_sparse_haar(const std::set<int>& orders, double duration_us,
                              std::uint64_t repetitions, double overhead_us) {
  if (orders.empty()) {
    throw std::invalid_argument("sparse sweep needs at least one order");
  }
  check_plan_inputs(duration_us, repetitions, overhead_us);
  ProtocolPlan plan;
  plan.kind = ProtocolKind::SparseHaar;
  plan.order = *orders.rbegin();
  plan.repetitions = repetitions;
  plan.overhead_us = overhead_us;
  plan.duration_us = duration_us;
  for (int i : orders) {
    if (i < 1 || i > 30) {
      throw std::invalid_argument("order must lie in [1, 30]");
    }
    const long long echoes = 1LL << (i - 1);
    const double tau = duration_us / static_cast<double>(echoes);
    try {
      auto order_runs = pack_order(echoes, tau, duration_us, overhead_us);
      for (auto& r : order_runs) plan.runs.push_back(std::move(r));
    } catch (const PackingError& e) {
      throw PackingError("order " + std::to_string(i) + ": " + e.what());
    }
  }
  return plan;
}

ProtocolPlan plan_walsh(int n, double duration_us, std::uint64_t repetitions,
                        double overhead_us) {
  if (n < 1 || n > 20) {
    throw std::invalid_argument("order must lie in [1, 20]");
  }
  check_plan_inputs(duration_us, repetitions, overhead_us);
  ProtocolPlan plan;
  plan.kind = ProtocolKind::Walsh;
  plan.order = n;
  plan.repetitions = repetitions;
  plan.overhead_us = overhead_us;
  plan.duration_us = duration_us;
  const long long dim = 1LL << n;
  for (long long m = 0; m < dim; ++m) {
    plan.runs.push_back({EchoSequence(0.0, duration_us)});
  }
  return plan;
}

ProtocolPlan plan_ramsey(long long points, double duration_us, std::uint64_t repetitions,
                         double overhead_us) {
  if (points < 1) {
    throw std::invalid_argument("point count must be >= 1");
  }
  check_plan_inputs(duration_us, repetitions, overhead_us);
  ProtocolPlan plan;
  plan.kind = ProtocolKind::Ramsey;
  plan.order = 0;
  plan.points = points;
  plan.repetitions = repetitions;
  plan.overhead_us = overhead_us;
  plan.duration_us = duration_us;
  const double tau = duration_us / static_cast<double>(points);
  plan.runs = pack_order(points, tau, duration_us, overhead_us);
  return plan;
}

RunBudget run_budget(const ProtocolPlan& plan) {
  RunBudget budget;
  budget.signal_runs_per_sweep = static_cast<long long>(plan.runs.size());
  budget.total_runs =
      budget.signal_runs_per_sweep * static_cast<long long>(plan.repetitions);
  budget.wall_estimate_s = static_cast<double>(budget.total_runs) *
                           (plan.duration_us + plan.overhead_us) * 1e-6;
  return budget;
}

double phase_to_coefficient(double phi, int order, double tau_us,
                            double gamma_rad_per_s_per_t,
                            CoefficientConvention convention) {
  if (order < 1) {
    throw std::invalid_argument("order must be >= 1");
  }
  if (!(tau_us > 0.0) || !(gamma_rad_per_s_per_t > 0.0)) {
    throw std::invalid_argument("tau and gamma must be positive");
  }
  double c = dyadic_inv_amplitude(order) * phi / (gamma_rad_per_s_per_t * tau_us * kMicroSquared);
  if (convention == CoefficientConvention::PaperConstant) {
    c *= M_PI / 2.0;
  }
  return c;
}

namespace {

// Shared by full and sparse sweeps: measure every (i, j) for i in `orders`.
void measure_levels(const SampledSignal& signal, const SensorParams& params,
                    const std::vector<int>& orders, const RunOptions& options,
                    HaarCoefficients& coeffs) {
  struct Task {
    int order;
    long long shift;
  };
  std::vector<Task> tasks;
  for (int i : orders) {
    const long long shifts = 1LL << (i - 1);
    for (long long j = 0; j < shifts; ++j) tasks.push_back({i, j});
  }

  const double gamma = params.gamma_rad_per_s_per_t;
  run_tasks(tasks.size(), options.threads, [&](std::size_t k) {
    const auto [i, j] = tasks[k];
    const double tau = signal.duration_us / static_cast<double>(1LL << (i - 1));
    const EchoSequence echo(static_cast<double>(j) * tau, tau);
    const double phi = accumulate_phase(signal, echo, gamma);
    const double envelope = params.echo_envelope(tau);
    MeasuredValue m;
    try {
      m = measure_phase(phi, envelope, 1, params, options, stream_id_for(i, j));
    } catch (const PhaseWrapError& e) {
      throw PhaseWrapError("coefficient (i=" + std::to_string(i) +
                           ", j=" + std::to_string(j) + "): " + e.what());
    }
    auto& entry = coeffs.levels[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
    entry.value_uT = phase_to_coefficient(m.value, i, tau, gamma, options.convention);
    entry.sigma_uT = phase_to_coefficient(m.sigma, i, tau, gamma, options.convention);
  });
}

}  // namespace

HaarCoefficients run_haar_protocol(const SampledSignal& signal, const SensorParams& params,
                                   int n, const RunOptions& options) {
  params.validate();
  plan_haar(n, signal.duration_us, options.noiseless ? 1 : options.repetitions,
            options.overhead_us);  // feasibility gate

  HaarCoefficients coeffs = HaarCoefficients::zeros(n);

  if (options.external_mean) {
    coeffs.mean.value_uT = options.external_mean->first;
    coeffs.mean.sigma_uT = options.external_mean->second;
  } else {
    const double gamma = params.gamma_rad_per_s_per_t;
    const double duration = signal.duration_us;
    const double phi0 = accumulate_phase_free(signal, 0.0, duration, gamma);
    const double envelope = params.ramsey_envelope(duration);
    MeasuredValue m;
    try {
      m = measure_phase(phi0, envelope, 0, params, options, 0);
    } catch (const PhaseWrapError& e) {
      throw PhaseWrapError(std::string("mean (c0): ") + e.what());
    }
    const double scale = 1.0 / (gamma * duration * kMicroSquared);
    coeffs.mean.value_uT = m.value * scale;
    coeffs.mean.sigma_uT = m.sigma * scale;
  }

  std::vector<int> orders(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) orders[static_cast<std::size_t>(i - 1)] = i;
  measure_levels(signal, params, orders, options, coeffs);
  return coeffs;
}

HaarCoefficients run_sparse_haar(const SampledSignal& signal, const SensorParams& params,
                                 const std::set<int>& orders, const RunOptions& options) {
  params.validate();
  plan_sparse_haar(orders, signal.duration_us,
                   options.noiseless ? 1 : options.repetitions, options.overhead_us);

  HaarCoefficients coeffs = HaarCoefficients::zeros(*orders.rbegin());
  measure_levels(signal, params, std::vector<int>(orders.begin(), orders.end()), options,
                 coeffs);
  return coeffs;
}

WalshProtocolResult run_walsh_protocol(const SampledSignal& signal, const SensorParams& params,
                                       int n, const RunOptions& options) {
  params.validate();
  const ProtocolPlan plan =
      plan_walsh(n, signal.duration_us, options.noiseless ? 1 : options.repetitions,
                 options.overhead_us);

  const std::size_t dim = 1ULL << n;
  const std::size_t count = signal.sample_count();
  if (count < 2 * dim) {
    throw ResolutionError("need >= 2 samples per finest Walsh segment");
  }

  const double gamma = params.gamma_rad_per_s_per_t;
  const double duration = signal.duration_us;
  const double scale = 1.0 / (gamma * duration * kMicroSquared);
  std::vector<double> values(dim, 0.0);
  std::vector<double> sigmas(dim, 0.0);

  run_tasks(dim, options.threads, [&](std::size_t m) {
    std::vector<int> signs(count);
    for (std::size_t k = 0; k < count; ++k) {
      const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      signs[k] = walsh_eval(static_cast<long long>(m), x);
    }
    const double phi = accumulate_phase_signed(signal, signs, gamma);
    // Sequency m flips sign m times: m pi pulses. m = 0 is free precession.
    const int pi_pulses = static_cast<int>(m);
    const double envelope =
        m == 0 ? params.ramsey_envelope(duration) : params.echo_envelope(duration);
    MeasuredValue mv;
    try {
      mv = measure_phase(phi, envelope, pi_pulses, params, options,
                         static_cast<std::uint64_t>(m));
    } catch (const PhaseWrapError& e) {
      throw PhaseWrapError("walsh coefficient m=" + std::to_string(m) + ": " + e.what());
    }
    values[m] = mv.value * scale;
    sigmas[m] = mv.sigma * scale;
  });

  WalshProtocolResult result{WalshSpectrum(std::move(values), n, std::move(sigmas)),
                             run_budget(plan)};
  return result;
}

Reconstruction run_ramsey_protocol(const SampledSignal& signal, const SensorParams& params,
                                   long long points, const RunOptions& options,
                                   double tau_t2star_warn_factor) {
  params.validate();
  plan_ramsey(points, signal.duration_us, options.noiseless ? 1 : options.repetitions,
              options.overhead_us);

  const double gamma = params.gamma_rad_per_s_per_t;
  const double tau = signal.duration_us / static_cast<double>(points);
  const double envelope = params.ramsey_envelope(tau);
  const double scale = 1.0 / (gamma * tau * kMicroSquared);

  Reconstruction recon;
  recon.order = 0;
  recon.points_uT.resize(static_cast<std::size_t>(points));
  recon.sigmas_uT.resize(static_cast<std::size_t>(points));
  recon.provenance = provenance_string(ProtocolKind::Ramsey, options);
  const double ratio = tau / params.t2_star_us;
  if (ratio > tau_t2star_warn_factor || ratio < 1.0 / tau_t2star_warn_factor) {
    recon.provenance += " [warn: tau/T2* = " + std::to_string(ratio) + "]";
  }

  run_tasks(static_cast<std::size_t>(points), options.threads, [&](std::size_t k) {
    const double start = static_cast<double>(k) * tau;
    const double phi = accumulate_phase_free(signal, start, tau, gamma);
    MeasuredValue m;
    try {
      m = measure_phase(phi, envelope, 0, params, options, static_cast<std::uint64_t>(k));
    } catch (const PhaseWrapError& e) {
      throw PhaseWrapError("ramsey interval " + std::to_string(k) + ": " + e.what());
    }
    recon.points_uT[k] = m.value * scale;
    recon.sigmas_uT[k] = m.sigma * scale;
  });
  return recon;
}

Reconstruction reconstruct(const HaarCoefficients& coeffs, int n,
                           const std::string& provenance) {
  Reconstruction recon = haar_reconstruct_points(coeffs, n);
  recon.provenance = provenance;
  return recon;
}

Reconstruction reconstruct_walsh(const WalshSpectrum& spectrum,
                                 const std::string& provenance) {
  Reconstruction recon;
  recon.order = spectrum.order;
  recon.points_uT = walsh_inverse(spectrum);
  double var = 0.0;
  for (double s : spectrum.sigmas_uT) var += s * s;
  recon.sigmas_uT.assign(recon.points_uT.size(), std::sqrt(var));
  recon.provenance = provenance;
  return recon;
}

EventDetection detect_events(const Reconstruction& recon, double threshold_sigma) {
  if (!(threshold_sigma >= 0.0) || !std::isfinite(threshold_sigma)) {
    throw std::invalid_argument("threshold must be finite and >= 0");
  }
  if (recon.points_uT.size() != recon.sigmas_uT.size()) {
    throw std::invalid_argument("reconstruction points/sigmas length mismatch");
  }
  for (double s : recon.sigmas_uT) {
    if (!(s > 0.0)) {
      throw std::invalid_argument("event detection needs positive sigmas");
    }
  }

  EventDetection detection;
  detection.threshold_sigma = threshold_sigma;
  const std::size_t bins = recon.points_uT.size();
  std::size_t k = 0;
  while (k < bins) {
    if (std::abs(recon.points_uT[k]) < threshold_sigma * recon.sigmas_uT[k]) {
      ++k;
      continue;
    }
    // Contiguous above-threshold bins merge into one event; the peak keeps
    // the lower bin index on ties.
    std::size_t peak = k;
    std::size_t end = k;
    while (end < bins &&
           std::abs(recon.points_uT[end]) >= threshold_sigma * recon.sigmas_uT[end]) {
      if (std::abs(recon.points_uT[end]) > std::abs(recon.points_uT[peak])) peak = end;
      ++end;
    }
    DetectedEvent ev;
    ev.bin = peak;
    ev.polarity = recon.points_uT[peak] >= 0.0 ? +1 : -1;
    ev.magnitude_uT = std::abs(recon.points_uT[peak]);
    detection.events.push_back(ev);
    k = end;
  }
  return detection;
}

}  // namespace haarsense

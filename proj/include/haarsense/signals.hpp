#pragma once

#include <filesystem>
#include <variant>
#include <vector>

namespace haarsense {

/// Uniformly sampled temporal magnetic field over [0, T).
///
/// Samples live at bin midpoints: samples[k] = b((k + 1/2) * dt) with
/// dt = duration_us / samples.size(). Field values are microtesla.
struct SampledSignal {
  double duration_us = 0.0;
  std::vector<double> samples;

  /// Throws std::invalid_argument unless duration > 0, size >= 2 and all
  /// values are finite.
  SampledSignal(double duration_us, std::vector<double> samples);

  std::size_t sample_count() const { return samples.size(); }
  double dt_us() const { return duration_us / static_cast<double>(samples.size()); }
  /// Midpoint time of sample k, microseconds.
  double time_at(std::size_t k) const { return (static_cast<double>(k) + 0.5) * dt_us(); }
};

/// b(t) = A sin(2 pi t / period + theta), amplitude in microtesla.
struct Sinusoid {
  double amplitude_uT = 0.0;
  double period_us = 1.0;
  double phase_rad = 0.0;
};

/// Piecewise-constant blocks spread evenly over [0, T).
struct Waveform {
  std::vector<double> values_uT;
};

/// One biphasic transient. The rendered pulse is the time derivative of a
/// double-exponential template with rise w/5 and fall w, scaled so the
/// positive lobe peaks at amplitude_uT and the lobe transition sits at
/// center_us; polarity -1 flips the sign.
struct ImpulseEvent {
  double center_us = 0.0;
  int polarity = +1;
  double amplitude_uT = 0.0;
  double width_us = 1.0;
};

struct ImpulseTrain {
  std::vector<ImpulseEvent> events;
};

using SignalSpec = std::variant<Sinusoid, Waveform, ImpulseTrain>;

/// Evaluate a spec on a uniform midpoint grid.
///
/// Throws std::invalid_argument for a bad grid, an event center outside
/// [0, T) or a non-positive impulse width.
SampledSignal generate(const SignalSpec& spec, double duration_us, std::size_t sample_count);

/// CSV format: header `t_us,b_uT`, one row per sample, times strictly
/// increasing and uniform (relative jitter above 1e-9 is rejected). Values
/// are printed with 17 significant digits so save/load round-trips bitwise.
SampledSignal load_csv(const std::filesystem::path& path);
void save_csv(const SampledSignal& signal, const std::filesystem::path& path);

}  // namespace haarsense

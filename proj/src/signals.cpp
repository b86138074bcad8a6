#include "haarsense/signals.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "haarsense/errors.hpp"

namespace haarsense {

SampledSignal::SampledSignal(double duration_us, std::vector<double> samples)
    : duration_us(duration_us), samples(std::move(samples)) {
  if (!(this->duration_us > 0.0)) {
    throw std::invalid_argument("signal duration must be positive");
  }
  if (this->samples.size() < 2) {
    throw std::invalid_argument("signal needs at least 2 samples");
  }
  for (double v : this->samples) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("signal samples must be finite");
    }
  }
}

namespace {

// Biphasic transient rendered from the derivative of a double-exponential
// action-potential template g(s) = exp(-s/tau_f) - exp(-s/tau_r) with
// tau_r = w/5, tau_f = w. The derivative peaks at onset with value 4/w and
// crosses zero at s = w ln(5)/4; the onset is placed so that crossing sits
// at the event's center time.
double impulse_value(const ImpulseEvent& ev, double t_us) {
  const double tau_r = ev.width_us / 5.0;
  const double tau_f = ev.width_us;
  const double onset = ev.center_us - ev.width_us * std::log(5.0) / 4.0;
  const double s = t_us - onset;
  if (s < 0.0) return 0.0;
  const double dg = std::exp(-s / tau_r) / tau_r - std::exp(-s / tau_f) / tau_f;
  const double peak = 1.0 / tau_r - 1.0 / tau_f;  // = 4/w
  return static_cast<double>(ev.polarity) * ev.amplitude_uT * dg / peak;
}

}  // namespace

SampledSignal generate(const SignalSpec& spec, double duration_us, std::size_t sample_count) {
  if (!(duration_us > 0.0)) {
    throw std::invalid_argument("duration must be positive");
  }
  if (sample_count < 2) {
    throw std::invalid_argument("sample_count must be >= 2");
  }
  const double dt = duration_us / static_cast<double>(sample_count);
  std::vector<double> samples(sample_count, 0.0);

  if (const auto* sine = std::get_if<Sinusoid>(&spec)) {
    if (sine->amplitude_uT < 0.0) {
      throw std::invalid_argument("sinusoid amplitude must be >= 0");
    }
    if (!(sine->period_us > 0.0)) {
      throw std::invalid_argument("sinusoid period must be positive");
    }
    const double omega = 2.0 * M_PI / sine->period_us;
    for (std::size_t k = 0; k < sample_count; ++k) {
      const double t = (static_cast<double>(k) + 0.5) * dt;
      samples[k] = sine->amplitude_uT * std::sin(omega * t + sine->phase_rad);
    }
  } else if (const auto* wave = std::get_if<Waveform>(&spec)) {
    if (wave->values_uT.empty()) {
      throw std::invalid_argument("waveform needs at least one block value");
    }
    const auto blocks = wave->values_uT.size();
    for (std::size_t k = 0; k < sample_count; ++k) {
      const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(sample_count);
      auto b = static_cast<std::size_t>(x * static_cast<double>(blocks));
      if (b >= blocks) b = blocks - 1;
      samples[k] = wave->values_uT[b];
    }
  } else {
    const auto& train = std::get<ImpulseTrain>(spec);
    for (const auto& ev : train.events) {
      if (!(ev.width_us > 0.0)) {
        throw std::invalid_argument("impulse width must be positive");
      }
      if (ev.center_us < 0.0 || ev.center_us >= duration_us) {
        throw std::invalid_argument("impulse center outside [0, T)");
      }
      if (ev.polarity != 1 && ev.polarity != -1) {
        throw std::invalid_argument("impulse polarity must be +1 or -1");
      }
      if (ev.amplitude_uT < 0.0) {
        throw std::invalid_argument("impulse amplitude must be >= 0");
      }
    }
    for (std::size_t k = 0; k < sample_count; ++k) {
      const double t = (static_cast<double>(k) + 0.5) * dt;
      double v = 0.0;
      for (const auto& ev : train.events) v += impulse_value(ev, t);
      samples[k] = v;
    }
  }
  return SampledSignal(duration_us, std::move(samples));
}

void save_csv(const SampledSignal& signal, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << "t_us,b_uT\n";
  char row[80];
  for (std::size_t k = 0; k < signal.sample_count(); ++k) {
    std::snprintf(row, sizeof(row), "%.17g,%.17g\n", signal.time_at(k), signal.samples[k]);
    out << row;
  }
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

SampledSignal load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("empty file: " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_us,b_uT") {
    throw FormatError("expected header 't_us,b_uT', got '" + line + "'");
  }

  std::vector<double> times;
  std::vector<double> values;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto first = line.find(',');
    if (first == std::string::npos || line.find(',', first + 1) != std::string::npos) {
      throw FormatError("row " + std::to_string(row_no) + ": expected exactly 2 columns");
    }
    std::size_t used = 0;
    double t = 0.0, v = 0.0;
    try {
      t = std::stod(line.substr(0, first), &used);
      if (used != first) throw std::invalid_argument("");
      const std::string rest = line.substr(first + 1);
      v = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw FormatError("row " + std::to_string(row_no) + ": malformed number");
    }
    times.push_back(t);
    values.push_back(v);
  }
  if (times.size() < 2) {
    throw FormatError("need at least 2 samples: " + path.string());
  }

  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) {
    throw FormatError("time column must be strictly increasing");
  }
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double step = times[k] - times[k - 1];
    if (!(step > 0.0)) {
      throw FormatError("time column must be strictly increasing (row " +
                        std::to_string(k + 2) + ")");
    }
    if (std::abs(step - dt) > 1e-9 * dt) {
      throw FormatError("non-uniform sample spacing (row " + std::to_string(k + 2) + ")");
    }
  }
  const double duration = dt * static_cast<double>(times.size());
  return SampledSignal(duration, std::move(values));
}

}  // namespace haarsense

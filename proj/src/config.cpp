#include "haarsense/config.hpp"

#include <fstream>
#include <initializer_list>
#include <string>
#include <unordered_set>

#include "haarsense/errors.hpp"

namespace haarsense {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const char* context,
                         std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw FormatError(std::string(context) + " must be a JSON object");
  }
  std::unordered_set<std::string> ok;
  for (const char* key : allowed) ok.insert(key);
  for (const auto& item : obj.items()) {
    if (!ok.contains(item.key())) {
      throw FormatError(std::string("unknown key '") + item.key() + "' in " + context);
    }
  }
}

const json& require(const json& obj, const char* context, const char* key) {
  if (!obj.contains(key)) {
    throw FormatError(std::string(context) + ": missing required key '" + key + "'");
  }
  return obj.at(key);
}

template <typename T>
T get_as(const json& value, const char* context, const char* key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string(context) + ": bad value for '" + key + "'");
  }
}

template <typename T>
void maybe(const json& obj, const char* context, const char* key, T& target) {
  if (obj.contains(key)) {
    target = get_as<T>(obj.at(key), context, key);
  }
}

SignalConfig parse_signal(const json& doc, const json& root) {
  SignalConfig config;
  reject_unknown_keys(doc, "signal",
                      {"kind", "amplitude_uT", "period_us", "phase_rad", "values_uT",
                       "events", "path"});
  const std::string kind = get_as<std::string>(require(doc, "signal", "kind"), "signal", "kind");

  if (kind == "csv") {
    config.csv = get_as<std::string>(require(doc, "signal", "path"), "signal", "path");
    if (root.contains("duration_us") || root.contains("sample_count")) {
      throw FormatError("csv signals carry their own grid; drop duration_us/sample_count");
    }
    return config;
  }

  config.duration_us =
      get_as<double>(require(root, "config", "duration_us"), "config", "duration_us");
  config.sample_count = get_as<std::size_t>(require(root, "config", "sample_count"),
                                            "config", "sample_count");

  if (kind == "sinusoid") {
    Sinusoid s;
    s.amplitude_uT = get_as<double>(require(doc, "signal", "amplitude_uT"), "signal",
                                    "amplitude_uT");
    s.period_us = get_as<double>(require(doc, "signal", "period_us"), "signal", "period_us");
    maybe(doc, "signal", "phase_rad", s.phase_rad);
    config.spec = s;
  } else if (kind == "waveform") {
    Waveform w;
    w.values_uT = get_as<std::vector<double>>(require(doc, "signal", "values_uT"), "signal",
                                              "values_uT");
    config.spec = w;
  } else if (kind == "impulse_train") {
    ImpulseTrain train;
    const json& events = require(doc, "signal", "events");
    if (!events.is_array()) {
      throw FormatError("signal.events must be an array");
    }
    for (const json& ev : events) {
      reject_unknown_keys(ev, "signal.events[]",
                          {"center_us", "polarity", "amplitude_uT", "width_us"});
      ImpulseEvent e;
      e.center_us = get_as<double>(require(ev, "event", "center_us"), "event", "center_us");
      e.amplitude_uT =
          get_as<double>(require(ev, "event", "amplitude_uT"), "event", "amplitude_uT");
      e.width_us = get_as<double>(require(ev, "event", "width_us"), "event", "width_us");
      maybe(ev, "event", "polarity", e.polarity);
      train.events.push_back(e);
    }
    config.spec = train;
  } else {
    throw FormatError("unknown signal kind '" + kind + "'");
  }
  return config;
}

SensorParams parse_sensor(const json& doc) {
  SensorParams params;
  reject_unknown_keys(doc, "sensor",
                      {"gamma_rad_per_s_per_t", "t2_us", "t2_star_us", "contrast_amplitude",
                       "photons_bright", "photons_dark", "decoherence_exponent",
                       "ramsey_exponent", "pi_pulse_contrast"});
  maybe(doc, "sensor", "gamma_rad_per_s_per_t", params.gamma_rad_per_s_per_t);
  maybe(doc, "sensor", "t2_us", params.t2_us);
  maybe(doc, "sensor", "t2_star_us", params.t2_star_us);
  maybe(doc, "sensor", "contrast_amplitude", params.contrast_amplitude);
  maybe(doc, "sensor", "photons_bright", params.photons_bright);
  maybe(doc, "sensor", "photons_dark", params.photons_dark);
  maybe(doc, "sensor", "decoherence_exponent", params.decoherence_exponent);
  maybe(doc, "sensor", "ramsey_exponent", params.ramsey_exponent);
  maybe(doc, "sensor", "pi_pulse_contrast", params.pi_pulse_contrast);
  params.validate();
  return params;
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  reject_unknown_keys(doc, "config",
                      {"signal", "duration_us", "sample_count", "sensor", "protocol", "seed",
                       "convention", "threads", "output"});
  RunConfig config;
  config.signal = parse_signal(require(doc, "config", "signal"), doc);
  if (doc.contains("sensor")) {
    config.sensor = parse_sensor(doc.at("sensor"));
  }

  const json& protocol = require(doc, "config", "protocol");
  reject_unknown_keys(protocol, "protocol",
                      {"kind", "order", "orders", "points", "repetitions", "noiseless",
                       "overhead_us", "external_c0_uT", "external_c0_sigma_uT"});
  const std::string kind =
      get_as<std::string>(require(protocol, "protocol", "kind"), "protocol", "kind");
  if (kind == "haar") {
    config.kind = ProtocolKind::Haar;
    config.order = get_as<int>(require(protocol, "protocol", "order"), "protocol", "order");
  } else if (kind == "walsh") {
    config.kind = ProtocolKind::Walsh;
    config.order = get_as<int>(require(protocol, "protocol", "order"), "protocol", "order");
  } else if (kind == "ramsey") {
    config.kind = ProtocolKind::Ramsey;
    config.points =
        get_as<long long>(require(protocol, "protocol", "points"), "protocol", "points");
  } else if (kind == "sparse_haar") {
    config.kind = ProtocolKind::SparseHaar;
    const auto orders = get_as<std::vector<int>>(require(protocol, "protocol", "orders"),
                                                 "protocol", "orders");
    config.orders = std::set<int>(orders.begin(), orders.end());
    if (config.orders.empty()) {
      throw FormatError("protocol.orders must not be empty");
    }
    config.order = *config.orders.rbegin();
  } else {
    throw FormatError("unknown protocol kind '" + kind + "'");
  }

  maybe(protocol, "protocol", "noiseless", config.options.noiseless);
  if (protocol.contains("repetitions")) {
    config.options.repetitions = get_as<std::uint64_t>(protocol.at("repetitions"),
                                                       "protocol", "repetitions");
  } else if (!config.options.noiseless) {
    throw FormatError("protocol: need 'repetitions' (or 'noiseless': true)");
  }
  maybe(protocol, "protocol", "overhead_us", config.options.overhead_us);
  if (protocol.contains("external_c0_uT") && !protocol.at("external_c0_uT").is_null()) {
    double sigma = 0.0;
    maybe(protocol, "protocol", "external_c0_sigma_uT", sigma);
    config.options.external_mean = {
        get_as<double>(protocol.at("external_c0_uT"), "protocol", "external_c0_uT"), sigma};
  } else if (protocol.contains("external_c0_sigma_uT")) {
    throw FormatError("protocol: external_c0_sigma_uT needs external_c0_uT");
  }

  maybe(doc, "config", "seed", config.options.seed);
  maybe(doc, "config", "threads", config.options.threads);
  if (config.options.threads < 1) {
    throw FormatError("threads must be >= 1");
  }
  if (doc.contains("convention")) {
    const auto name = get_as<std::string>(doc.at("convention"), "config", "convention");
    if (name == "integral") {
      config.options.convention = CoefficientConvention::Integral;
    } else if (name == "paper") {
      config.options.convention = CoefficientConvention::PaperConstant;
    } else {
      throw FormatError("convention must be 'integral' or 'paper'");
    }
  }

  if (doc.contains("output")) {
    const json& output = doc.at("output");
    reject_unknown_keys(output, "output",
                        {"coefficients", "budget", "reconstruction", "plot"});
    auto path_of = [&](const char* key) -> std::optional<std::filesystem::path> {
      if (!output.contains(key)) return std::nullopt;
      return std::filesystem::path(get_as<std::string>(output.at(key), "output", key));
    };
    config.output.coefficients = path_of("coefficients");
    config.output.budget = path_of("budget");
    config.output.reconstruction = path_of("reconstruction");
    config.output.plot = path_of("plot");
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open: " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

SampledSignal realize_signal(const SignalConfig& config) {
  if (config.csv) {
    return load_csv(*config.csv);
  }
  if (!config.spec) {
    throw FormatError("signal config carries neither a spec nor a csv path");
  }
  return generate(*config.spec, config.duration_us, config.sample_count);
}

}  // namespace haarsense

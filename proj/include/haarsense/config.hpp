#pragma once

#include <filesystem>
#include <optional>
#include <set>

#include <json.hpp>

#include "haarsense/protocol.hpp"
#include "haarsense/signals.hpp"
#include "haarsense/spinsim.hpp"

namespace haarsense {

/// Signal source: either a generated spec on an explicit grid or a CSV file.
struct SignalConfig {
  std::optional<SignalSpec> spec;
  std::optional<std::filesystem::path> csv;
  double duration_us = 0.0;
  std::size_t sample_count = 0;
};

struct OutputPaths {
  std::optional<std::filesystem::path> coefficients;
  std::optional<std::filesystem::path> budget;
  std::optional<std::filesystem::path> reconstruction;
  std::optional<std::filesystem::path> plot;
};

/// One validated `simulate` run. Unknown JSON keys are rejected so typos
/// cannot silently fall back to defaults.
struct RunConfig {
  SignalConfig signal;
  SensorParams sensor;
  ProtocolKind kind = ProtocolKind::Haar;
  int order = 0;            // haar / walsh
  long long points = 0;     // ramsey
  std::set<int> orders;     // sparse_haar
  RunOptions options;
  OutputPaths output;
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

/// Generate or load the configured signal.
SampledSignal realize_signal(const SignalConfig& config);

}  // namespace haarsense

#include "haarsense/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "haarsense/errors.hpp"

namespace haarsense {

namespace {

using nlohmann::json;

constexpr const char* kCoefficientsSchema = "haarsense.coefficients.v1";
constexpr const char* kWalshSchema = "haarsense.walsh.v1";
constexpr const char* kBudgetSchema = "haarsense.budget.v1";
constexpr const char* kEventsSchema = "haarsense.events.v1";

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open: " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void save_json_file(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << doc.dump(2) << '\n';
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

void expect_schema(const json& doc, const char* schema) {
  if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_string() ||
      doc["schema"].get<std::string>() != schema) {
    throw FormatError(std::string("expected schema '") + schema + "'");
  }
}

const json& field(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw FormatError(std::string("missing field '") + key + "'");
  }
  return doc.at(key);
}

json provenance_to_json(const Provenance& p) {
  json doc{{"protocol", p.protocol},
           {"repetitions", p.repetitions},
           {"noiseless", p.noiseless},
           {"seed", p.seed},
           {"convention", p.convention}};
  if (!p.measured_orders.empty()) {
    doc["measured_orders"] = p.measured_orders;
  }
  return doc;
}

Provenance provenance_from_json(const json& doc) {
  Provenance p;
  p.protocol = field(doc, "protocol").get<std::string>();
  p.repetitions = field(doc, "repetitions").get<std::uint64_t>();
  p.noiseless = field(doc, "noiseless").get<bool>();
  p.seed = field(doc, "seed").get<std::uint64_t>();
  p.convention = field(doc, "convention").get<std::string>();
  if (doc.contains("measured_orders")) {
    p.measured_orders = doc["measured_orders"].get<std::vector<int>>();
  }
  return p;
}

}  // namespace

json coefficients_to_json(const CoefficientsFile& file) {
  file.coeffs.validate();
  json levels = json::array();
  for (int i = 1; i <= file.coeffs.max_order; ++i) {
    json entries = json::array();
    const auto& level = file.coeffs.levels[static_cast<std::size_t>(i - 1)];
    for (std::size_t j = 0; j < level.size(); ++j) {
      entries.push_back(json{{"shift", j},
                             {"value_uT", level[j].value_uT},
                             {"sigma_uT", level[j].sigma_uT}});
    }
    levels.push_back(json{{"order", i}, {"coefficients", std::move(entries)}});
  }
  return json{{"schema", kCoefficientsSchema},
              {"duration_us", file.duration_us},
              {"provenance", provenance_to_json(file.provenance)},
              {"c0", json{{"value_uT", file.coeffs.mean.value_uT},
                          {"sigma_uT", file.coeffs.mean.sigma_uT}}},
              {"levels", std::move(levels)}};
}

CoefficientsFile coefficients_from_json(const json& doc) {
  expect_schema(doc, kCoefficientsSchema);
  CoefficientsFile file;
  file.duration_us = field(doc, "duration_us").get<double>();
  file.provenance = provenance_from_json(field(doc, "provenance"));

  const json& levels = field(doc, "levels");
  if (!levels.is_array()) {
    throw FormatError("'levels' must be an array");
  }
  file.coeffs = HaarCoefficients::zeros(static_cast<int>(levels.size()));
  const json& c0 = field(doc, "c0");
  file.coeffs.mean.value_uT = field(c0, "value_uT").get<double>();
  file.coeffs.mean.sigma_uT = field(c0, "sigma_uT").get<double>();

  for (const json& level : levels) {
    const int order = field(level, "order").get<int>();
    if (order < 1 || order > file.coeffs.max_order) {
      throw FormatError("level order " + std::to_string(order) + " out of range");
    }
    const json& entries = field(level, "coefficients");
    auto& target = file.coeffs.levels[static_cast<std::size_t>(order - 1)];
    if (!entries.is_array() || entries.size() != target.size()) {
      throw FormatError("level " + std::to_string(order) + " must hold 2^(i-1) entries");
    }
    for (const json& entry : entries) {
      const auto shift = field(entry, "shift").get<std::size_t>();
      if (shift >= target.size()) {
        throw FormatError("shift out of range at order " + std::to_string(order));
      }
      target[shift].value_uT = field(entry, "value_uT").get<double>();
      target[shift].sigma_uT = field(entry, "sigma_uT").get<double>();
    }
  }
  file.coeffs.validate();
  return file;
}

void save_coefficients(const CoefficientsFile& file, const std::filesystem::path& path) {
  save_json_file(coefficients_to_json(file), path);
}

CoefficientsFile load_coefficients(const std::filesystem::path& path) {
  return coefficients_from_json(load_json_file(path));
}

json walsh_to_json(const WalshFile& file) {
  json entries = json::array();
  for (std::size_t m = 0; m < file.spectrum.coefficients_uT.size(); ++m) {
    const double sigma =
        file.spectrum.sigmas_uT.empty() ? 0.0 : file.spectrum.sigmas_uT[m];
    entries.push_back(json{{"index", m},
                           {"value_uT", file.spectrum.coefficients_uT[m]},
                           {"sigma_uT", sigma}});
  }
  return json{{"schema", kWalshSchema},
              {"duration_us", file.duration_us},
              {"provenance", provenance_to_json(file.provenance)},
              {"order", file.spectrum.order},
              {"coefficients", std::move(entries)}};
}

WalshFile walsh_from_json(const json& doc) {
  expect_schema(doc, kWalshSchema);
  const int order = field(doc, "order").get<int>();
  const json& entries = field(doc, "coefficients");
  if (!entries.is_array() || entries.size() != (1ULL << order)) {
    throw FormatError("walsh spectrum must hold exactly 2^order coefficients");
  }
  std::vector<double> values(entries.size(), 0.0);
  std::vector<double> sigmas(entries.size(), 0.0);
  for (const json& entry : entries) {
    const auto m = field(entry, "index").get<std::size_t>();
    if (m >= values.size()) {
      throw FormatError("walsh index out of range");
    }
    values[m] = field(entry, "value_uT").get<double>();
    sigmas[m] = field(entry, "sigma_uT").get<double>();
  }
  return WalshFile{WalshSpectrum(std::move(values), order, std::move(sigmas)),
                   field(doc, "duration_us").get<double>(),
                   provenance_from_json(field(doc, "provenance"))};
}

void save_walsh(const WalshFile& file, const std::filesystem::path& path) {
  save_json_file(walsh_to_json(file), path);
}

WalshFile load_walsh(const std::filesystem::path& path) {
  return walsh_from_json(load_json_file(path));
}

json budget_to_json(const RunBudget& budget, const std::string& kind) {
  return json{{"schema", kBudgetSchema},
              {"kind", kind},
              {"signal_runs_per_sweep", budget.signal_runs_per_sweep},
              {"total_runs", budget.total_runs},
              {"wall_estimate_s", budget.wall_estimate_s}};
}

void save_budget(const RunBudget& budget, const std::string& kind,
                 const std::filesystem::path& path) {
  save_json_file(budget_to_json(budget, kind), path);
}

json events_to_json(const EventDetection& detection, int order, double duration_us) {
  const double bin_width = duration_us / static_cast<double>(1ULL << order);
  json events = json::array();
  for (const auto& ev : detection.events) {
    events.push_back(json{{"bin", ev.bin},
                          {"t_us", (static_cast<double>(ev.bin) + 0.5) * bin_width},
                          {"polarity", ev.polarity},
                          {"magnitude_uT", ev.magnitude_uT}});
  }
  return json{{"schema", kEventsSchema},
              {"order", order},
              {"duration_us", duration_us},
              {"threshold_sigma", detection.threshold_sigma},
              {"events", std::move(events)}};
}

void save_events(const EventDetection& detection, int order, double duration_us,
                 const std::filesystem::path& path) {
  save_json_file(events_to_json(detection, order, duration_us), path);
}

void save_reconstruction_csv(const Reconstruction& recon, double duration_us,
                             const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << "t_us,b_uT,sigma_uT\n";
  const auto bins = recon.points_uT.size();
  char row[120];
  for (std::size_t k = 0; k < bins; ++k) {
    const double t = (static_cast<double>(k) + 0.5) * duration_us / static_cast<double>(bins);
    std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g\n", t, recon.points_uT[k],
                  recon.sigmas_uT[k]);
    out << row;
  }
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

Reconstruction load_reconstruction_csv(const std::filesystem::path& path,
                                       double* duration_us) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open: " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw FormatError("empty file: " + path.string());
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_us,b_uT,sigma_uT") {
    throw FormatError("expected header 't_us,b_uT,sigma_uT', got '" + line + "'");
  }
  Reconstruction recon;
  std::vector<double> times;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double t = 0.0, v = 0.0, s = 0.0;
    std::istringstream ss(line);
    std::string tok;
    int col = 0;
    while (std::getline(ss, tok, ',')) {
      try {
        std::size_t used = 0;
        const double parsed = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("");
        if (col == 0) t = parsed;
        else if (col == 1) v = parsed;
        else if (col == 2) s = parsed;
      } catch (const std::exception&) {
        throw FormatError("row " + std::to_string(row_no) + ": malformed number");
      }
      ++col;
    }
    if (col != 3) {
      throw FormatError("row " + std::to_string(row_no) + ": expected exactly 3 columns");
    }
    times.push_back(t);
    recon.points_uT.push_back(v);
    recon.sigmas_uT.push_back(s);
  }
  if (times.size() < 1) {
    throw FormatError("no data rows: " + path.string());
  }
  if (duration_us != nullptr) {
    // Bin centers (k + 1/2) * dt imply dt = 2 * t0.
    *duration_us = 2.0 * times.front() * static_cast<double>(times.size());
  }
  const auto bins = recon.points_uT.size();
  recon.order = 0;
  for (int n = 0; n <= 30; ++n) {
    if ((1ULL << n) == bins) {
      recon.order = n;
      break;
    }
  }
  return recon;
}

}  // namespace haarsense

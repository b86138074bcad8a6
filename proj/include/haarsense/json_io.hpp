#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "haarsense/protocol.hpp"
#include "haarsense/wavelet.hpp"

namespace haarsense {

/// Execution metadata embedded in every output document.
struct Provenance {
  std::string protocol;            // haar | walsh | ramsey | sparse_haar | transform
  std::uint64_t repetitions = 0;   // 0 when noiseless
  bool noiseless = false;
  std::uint64_t seed = 0;
  std::string convention = "integral";
  std::vector<int> measured_orders;  // sparse sweeps only
};

struct CoefficientsFile {
  HaarCoefficients coeffs;
  double duration_us = 0.0;
  Provenance provenance;
};

struct WalshFile {
  WalshSpectrum spectrum;
  double duration_us = 0.0;
  Provenance provenance;
};

nlohmann::json coefficients_to_json(const CoefficientsFile& file);
CoefficientsFile coefficients_from_json(const nlohmann::json& doc);
void save_coefficients(const CoefficientsFile& file, const std::filesystem::path& path);
CoefficientsFile load_coefficients(const std::filesystem::path& path);

nlohmann::json walsh_to_json(const WalshFile& file);
WalshFile walsh_from_json(const nlohmann::json& doc);
void save_walsh(const WalshFile& file, const std::filesystem::path& path);
WalshFile load_walsh(const std::filesystem::path& path);

nlohmann::json budget_to_json(const RunBudget& budget, const std::string& kind);
void save_budget(const RunBudget& budget, const std::string& kind,
                 const std::filesystem::path& path);

nlohmann::json events_to_json(const EventDetection& detection, int order,
                              double duration_us);
void save_events(const EventDetection& detection, int order, double duration_us,
                 const std::filesystem::path& path);

/// Reconstruction CSV: header `t_us,b_uT,sigma_uT`, 17 significant digits,
/// bin-center times derived from duration_us.
void save_reconstruction_csv(const Reconstruction& recon, double duration_us,
                             const std::filesystem::path& path);
Reconstruction load_reconstruction_csv(const std::filesystem::path& path,
                                       double* duration_us = nullptr);

}  // namespace haarsense

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace haarsense {

/// Amplitude-resolution breakdown for an order-n reconstruction.
struct ResolutionReport {
  int order = 1;                      // n
  long long points = 2;               // N = 2^n
  std::vector<double> per_order_uT;   // delta b_i, one per order i = 1..n
  double total_sum_uT = 0.0;          // sqrt(sum over all coefficients)
  double total_closed_form_uT = 0.0;  // sqrt((N^2-1)/(3 M T T2)) / gamma
  double gain_vs_ramsey = 0.0;        // sqrt(T2/T2*) * sqrt(3/n)
  double gain_vs_walsh = 0.0;         // sqrt(3/n)
  std::uint64_t repetitions = 1;
  double duration_us = 0.0;
  double t2_us = 0.0;
};

/// Minimal detectable field kappa / (gamma sqrt(M tau T2)), microtesla.
/// kappa = 1 by convention; the tested contract is the proportionality.
/// Throws std::domain_error on non-positive input.
double min_detectable_field(std::uint64_t repetitions, double tau_us, double t2_us,
                            double gamma_rad_per_s_per_t);

/// Resolution totals computed two ways: the explicit sum over delta b_i^j
/// with tau_i = T/2^(i-1) and 2^(i-1) coefficients per order, and the closed
/// form sqrt((N^2-1)/(3 M T T2))/gamma. They agree through the identity
/// sum 4^(i-1) = (4^n - 1)/3.
ResolutionReport haar_resolution(int n, std::uint64_t repetitions, double duration_us,
                                 double t2_us, double gamma_rad_per_s_per_t);

/// Sensitivity gain of the echo-wavelet readout over sequential Ramsey
/// interferometry at equal total signal runs: sqrt(T2/T2*) * sqrt(3/n).
double gain_over_ramsey(double t2_us, double t2_star_us, int n);

/// The Walsh comparison gains sqrt(T2/T2*) over Ramsey, so the two methods'
/// gain ratio is sqrt(3/n).
double gain_walsh_ratio(int n);

struct ComparisonRow {
  int order = 1;
  long long points = 2;
  double haar_db_uT = 0.0;
  double walsh_db_uT = 0.0;
  double ramsey_db_uT = 0.0;
  long long haar_runs = 0;
  long long walsh_runs = 0;
  double gain_ramsey = 0.0;
  double gain_walsh_ratio = 0.0;
};

/// Per-order comparison for n = 1..n_max (n_max <= 16 guards the 4^n terms).
///
/// The Ramsey column is the per-point resolution at interval tau = T/N; the
/// Haar and Walsh columns divide it by their respective equal-run-budget
/// gains, so every row satisfies haar/walsh = sqrt(n/3).
std::vector<ComparisonRow> compare_protocols(double t2_us, double t2_star_us,
                                             std::uint64_t repetitions, double duration_us,
                                             int n_max, double gamma_rad_per_s_per_t);

/// CSV with header
/// n,N,haar_db_uT,walsh_db_uT,ramsey_db_uT,haar_runs,walsh_runs,gain_ramsey,gain_walsh_ratio
std::string comparison_csv(const std::vector<ComparisonRow>& rows);
void save_comparison_csv(const std::vector<ComparisonRow>& rows,
                         const std::filesystem::path& path);

}  // namespace haarsense

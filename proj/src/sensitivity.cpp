#include "haarsense/sensitivity.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "haarsense/errors.hpp"

namespace haarsense {

double min_detectable_field(std::uint64_t repetitions, double tau_us, double t2_us,
                            double gamma_rad_per_s_per_t) {
  if (repetitions < 1 || !(tau_us > 0.0) || !(t2_us > 0.0) ||
      !(gamma_rad_per_s_per_t > 0.0)) {
    throw std::domain_error("all sensitivity inputs must be positive");
  }
  // kappa = 1; tau and T2 are microseconds, the result microtesla, so the
  // two 1e-6 factors combine into 1e12 / sqrt(...).
  return 1e12 / (gamma_rad_per_s_per_t *
                 std::sqrt(static_cast<double>(repetitions) * tau_us * t2_us));
}

ResolutionReport haar_resolution(int n, std::uint64_t repetitions, double duration_us,
                                 double t2_us, double gamma_rad_per_s_per_t) {
  if (n < 1 || n > 16) {
    throw std::domain_error("order must lie in [1, 16]");
  }
  if (!(duration_us > 0.0)) {
    throw std::domain_error("duration must be positive");
  }
  ResolutionReport report;
  report.order = n;
  report.points = 1LL << n;
  report.repetitions = repetitions;
  report.duration_us = duration_us;
  report.t2_us = t2_us;

  double sum_sq = 0.0;
  report.per_order_uT.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double tau_i = duration_us / static_cast<double>(1LL << (i - 1));
    const double db = min_detectable_field(repetitions, tau_i, t2_us, gamma_rad_per_s_per_t);
    report.per_order_uT.push_back(db);
    sum_sq += static_cast<double>(1LL << (i - 1)) * db * db;  // 2^(i-1) coefficients
  }
  report.total_sum_uT = std::sqrt(sum_sq);

  const double big_n = static_cast<double>(report.points);
  report.total_closed_form_uT =
      1e12 *
      std::sqrt((big_n * big_n - 1.0) /
                (3.0 * static_cast<double>(repetitions) * duration_us * t2_us)) /
      gamma_rad_per_s_per_t;
  report.gain_vs_walsh = gain_walsh_ratio(n);
  return report;
}

double gain_over_ramsey(double t2_us, double t2_star_us, int n) {
  if (!(t2_us > t2_star_us) || !(t2_star_us > 0.0)) {
    throw std::domain_error("need t2 > t2* > 0");
  }
  if (n < 1) {
    throw std::domain_error("order must be >= 1");
  }
  return std::sqrt(t2_us / t2_star_us) * std::sqrt(3.0 / static_cast<double>(n));
}

double gain_walsh_ratio(int n) {
  if (n < 1) {
    throw std::domain_error("order must be >= 1");
  }
  return std::sqrt(3.0 / static_cast<double>(n));
}

std::vector<ComparisonRow> compare_protocols(double t2_us, double t2_star_us,
                                             std::uint64_t repetitions, double duration_us,
                                             int n_max, double gamma_rad_per_s_per_t) {
  if (n_max < 1 || n_max > 16) {
    throw std::domain_error("n_max must lie in [1, 16]");
  }
  if (!(t2_us > t2_star_us) || !(t2_star_us > 0.0) || !(duration_us > 0.0) ||
      repetitions < 1 || !(gamma_rad_per_s_per_t > 0.0)) {
    throw std::domain_error("all comparison inputs must be positive with t2 > t2*");
  }

  const double walsh_gain = std::sqrt(t2_us / t2_star_us);
  std::vector<ComparisonRow> rows;
  rows.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    ComparisonRow row;
    row.order = n;
    row.points = 1LL << n;
    const double tau = duration_us / static_cast<double>(row.points);
    row.ramsey_db_uT = min_detectable_field(repetitions, tau, t2_star_us,
                                            gamma_rad_per_s_per_t);
    row.gain_ramsey = gain_over_ramsey(t2_us, t2_star_us, n);
    row.gain_walsh_ratio = gain_walsh_ratio(n);
    row.haar_db_uT = row.ramsey_db_uT / row.gain_ramsey;
    row.walsh_db_uT = row.ramsey_db_uT / walsh_gain;
    row.haar_runs = n + 1;
    row.walsh_runs = row.points;
    rows.push_back(row);
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out =
      "n,N,haar_db_uT,walsh_db_uT,ramsey_db_uT,haar_runs,walsh_runs,gain_ramsey,"
      "gain_walsh_ratio\n";
  char line[320];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%d,%lld,%.17g,%.17g,%.17g,%lld,%lld,%.17g,%.17g\n",
                  r.order, r.points, r.haar_db_uT, r.walsh_db_uT, r.ramsey_db_uT,
                  r.haar_runs, r.walsh_runs, r.gain_ramsey, r.gain_walsh_ratio);
    out += line;
  }
  return out;
}

void save_comparison_csv(const std::vector<ComparisonRow>& rows,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open for writing: " + path.string());
  }
  out << comparison_csv(rows);
  if (!out) {
    throw IoError("write failed: " + path.string());
  }
}

}  // namespace haarsense

#include "haarsense/wavelet.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "haarsense/errors.hpp"

namespace haarsense {

namespace {

// 2^((i-1)/2) built from exact powers of two times sqrt(2), so dyadic
// amplitudes carry no pow() rounding.
double dyadic_amplitude(int order) {
  const int k = order - 1;
  return (k % 2 == 0) ? std::ldexp(1.0, k / 2)
                      : std::ldexp(std::numbers::sqrt2, (k - 1) / 2);
}

void check_unit_interval(double x) {
  if (!(x >= 0.0) || !(x < 1.0)) {
    throw std::domain_error("x must lie in [0, 1)");
  }
}

// Rademacher function r_k: +-1 on the 2^(k+1) equal subdivisions of [0,1),
// starting positive.
int rademacher(int k, double x) {
  const auto cell = static_cast<long long>(std::floor(std::ldexp(x, k + 1)));
  return (cell & 1LL) ? -1 : +1;
}

}  // namespace

DyadicIndex::DyadicIndex(int order, int shift) : order(order), shift(shift) {
  if (order < 1) {
    throw std::invalid_argument("order must be >= 1");
  }
  if (order > 62) {
    throw std::invalid_argument("order too large");
  }
  if (shift < 0 || static_cast<long long>(shift) >= (1LL << (order - 1))) {
    throw std::invalid_argument("shift outside [0, 2^(order-1))");
  }
}

HaarCoefficients HaarCoefficients::zeros(int max_order) {
  if (max_order < 0) {
    throw std::invalid_argument("max_order must be >= 0");
  }
  HaarCoefficients c;
  c.max_order = max_order;
  c.levels.resize(static_cast<std::size_t>(max_order));
  for (int i = 1; i <= max_order; ++i) {
    c.levels[static_cast<std::size_t>(i - 1)].assign(1ULL << (i - 1), CoefficientEntry{});
  }
  return c;
}

void HaarCoefficients::validate() const {
  if (max_order < 0 || levels.size() != static_cast<std::size_t>(max_order)) {
    throw std::invalid_argument("max_order inconsistent with stored levels");
  }
  if (!(mean.sigma_uT >= 0.0)) {
    throw std::invalid_argument("sigma must be >= 0");
  }
  for (int i = 1; i <= max_order; ++i) {
    const auto& level = levels[static_cast<std::size_t>(i - 1)];
    if (level.size() != (1ULL << (i - 1))) {
      throw std::invalid_argument("level " + std::to_string(i) +
                                  " must hold 2^(i-1) entries");
    }
    for (const auto& e : level) {
      if (!(e.sigma_uT >= 0.0)) {
        throw std::invalid_argument("sigma must be >= 0");
      }
    }
  }
}

const CoefficientEntry& HaarCoefficients::at(const DyadicIndex& idx) const {
  return levels.at(static_cast<std::size_t>(idx.order - 1))
      .at(static_cast<std::size_t>(idx.shift));
}

CoefficientEntry& HaarCoefficients::at(const DyadicIndex& idx) {
  return levels.at(static_cast<std::size_t>(idx.order - 1))
      .at(static_cast<std::size_t>(idx.shift));
}

WalshSpectrum::WalshSpectrum(std::vector<double> coefficients, int order,
                             std::vector<double> sigmas)
    : coefficients_uT(std::move(coefficients)), sigmas_uT(std::move(sigmas)), order(order) {
  if (order < 0 || order > 30) {
    throw std::invalid_argument("walsh order out of range");
  }
  if (coefficients_uT.size() != (1ULL << order)) {
    throw std::invalid_argument("spectrum length must be exactly 2^order");
  }
  if (!sigmas_uT.empty() && sigmas_uT.size() != coefficients_uT.size()) {
    throw std::invalid_argument("sigma list length mismatch");
  }
}

double haar_eval(const DyadicIndex& idx, double x) {
  check_unit_interval(x);
  // y = x * 2^(i-1) - j maps the support of h_i^j onto [0, 1).
  const double y = std::ldexp(x, idx.order - 1) - static_cast<double>(idx.shift);
  if (y < 0.0 || y >= 1.0) return 0.0;
  const double amp = dyadic_amplitude(idx.order);
  return y < 0.5 ? amp : -amp;
}

HaarCoefficients haar_transform(const SampledSignal& signal, int n) {
  if (n < 0) {
    throw std::invalid_argument("order must be >= 0");
  }
  if (n > 30) {
    throw std::invalid_argument("order too large");
  }
  const std::size_t count = signal.sample_count();
  if (count < (1ULL << n)) {
    throw ResolutionError("grid puts < 1 sample in the finest half-interval (need >= 2^n)");
  }

  HaarCoefficients coeffs = HaarCoefficients::zeros(n);
  const double dx = 1.0 / static_cast<double>(count);

  double sum = 0.0;
  for (double v : signal.samples) sum += v;
  coeffs.mean.value_uT = sum * dx;

  // One pass per order: every sample falls in exactly one shift's support.
  for (int i = 1; i <= n; ++i) {
    auto& level = coeffs.levels[static_cast<std::size_t>(i - 1)];
    std::vector<double> acc(level.size(), 0.0);
    for (std::size_t k = 0; k < count; ++k) {
      const double x = (static_cast<double>(k) + 0.5) * dx;
      const double y = std::ldexp(x, i - 1);
      const auto j = static_cast<std::size_t>(y);
      acc[j] += (y - static_cast<double>(j) < 0.5) ? signal.samples[k] : -signal.samples[k];
    }
    const double amp = dyadic_amplitude(i);
    for (std::size_t j = 0; j < level.size(); ++j) {
      level[j].value_uT = acc[j] * amp * dx;
    }
  }
  return coeffs;
}

double haar_partial_sum(const HaarCoefficients& coeffs, int n, double x) {
  if (n < 0 || n > coeffs.max_order) {
    throw std::out_of_range("partial-sum order exceeds stored max_order");
  }
  check_unit_interval(x);
  double value = coeffs.mean.value_uT;
  for (int i = 1; i <= n; ++i) {
    const double y = std::ldexp(x, i - 1);
    const auto j = static_cast<std::size_t>(y);
    const double amp = dyadic_amplitude(i);
    const double h = (y - static_cast<double>(j) < 0.5) ? amp : -amp;
    value += coeffs.levels[static_cast<std::size_t>(i - 1)][j].value_uT * h;
  }
  return value;
}

Reconstruction haar_reconstruct_points(const HaarCoefficients& coeffs, int n) {
  if (n < 0 || n > coeffs.max_order) {
    throw std::out_of_range("reconstruction order exceeds stored max_order");
  }
  const std::size_t points = 1ULL << n;
  Reconstruction recon;
  recon.order = n;
  recon.points_uT.resize(points);
  recon.sigmas_uT.resize(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(points);
    double value = coeffs.mean.value_uT;
    double var = coeffs.mean.sigma_uT * coeffs.mean.sigma_uT;
    for (int i = 1; i <= n; ++i) {
      const double y = std::ldexp(x, i - 1);
      const auto j = static_cast<std::size_t>(y);
      const double amp = dyadic_amplitude(i);
      const double h = (y - static_cast<double>(j) < 0.5) ? amp : -amp;
      const auto& entry = coeffs.levels[static_cast<std::size_t>(i - 1)][j];
      value += entry.value_uT * h;
      var += h * h * entry.sigma_uT * entry.sigma_uT;
    }
    recon.points_uT[k] = value;
    recon.sigmas_uT[k] = std::sqrt(var);
  }
  return recon;
}

int walsh_eval(long long m, double x) {
  if (m < 0) {
    throw std::domain_error("walsh index must be >= 0");
  }
  check_unit_interval(x);
  // Sequency order: product of Rademacher functions picked by the bits of
  // the Gray code of m.
  unsigned long long gray = static_cast<unsigned long long>(m);
  gray ^= gray >> 1;
  int sign = 1;
  for (int k = 0; gray != 0; ++k, gray >>= 1) {
    if (gray & 1ULL) sign *= rademacher(k, x);
  }
  return sign;
}

WalshSpectrum walsh_transform(const SampledSignal& signal, int n) {
  if (n < 0 || n > 20) {
    throw std::invalid_argument("walsh order out of range");
  }
  const std::size_t count = signal.sample_count();
  const std::size_t dim = 1ULL << n;
  if (count < dim) {
    throw ResolutionError("grid puts < 1 sample in the finest Walsh interval");
  }
  const double dx = 1.0 / static_cast<double>(count);
  std::vector<double> coefficients(dim, 0.0);
  for (std::size_t m = 0; m < dim; ++m) {
    double acc = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const double x = (static_cast<double>(k) + 0.5) * dx;
      acc += signal.samples[k] * static_cast<double>(walsh_eval(static_cast<long long>(m), x));
    }
    coefficients[m] = acc * dx;
  }
  return WalshSpectrum(std::move(coefficients), n);
}

std::vector<double> walsh_inverse(const WalshSpectrum& spectrum) {
  const std::size_t dim = spectrum.coefficients_uT.size();
  std::vector<double> points(dim, 0.0);
  for (std::size_t k = 0; k < dim; ++k) {
    const double x = (static_cast<double>(k) + 0.5) / static_cast<double>(dim);
    double acc = 0.0;
    for (std::size_t m = 0; m < dim; ++m) {
      acc += spectrum.coefficients_uT[m] *
             static_cast<double>(walsh_eval(static_cast<long long>(m), x));
    }
    points[k] = acc;
  }
  return points;
}

}  // namespace haarsense

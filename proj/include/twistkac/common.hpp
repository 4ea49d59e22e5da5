#ifndef TWISTKAC_COMMON_HPP
#define TWISTKAC_COMMON_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace twistkac {

using cplx = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Phase distance |e^{i phi} - 1| below which a twist counts as singular.
inline constexpr double singular_tol = 1e-9;

/// Reduce an angle to [0, 2*pi).
inline double reduce_angle(double phi) {
  double r = std::fmod(phi, two_pi);
  if (r < 0) r += two_pi;
  return r;
}

/// |e^{i phi} - 1| = 2|sin(phi/2)|, computed without cancellation.
inline double phase_distance_to_identity(double phi) {
  return 2.0 * std::abs(std::sin(0.5 * phi));
}

inline bool phase_is_identity(double phi, double tol = singular_tol) {
  return phase_distance_to_identity(phi) < tol;
}

/// Exact factorial for k <= 20 (largest that fits in 64 bits).
inline std::uint64_t factorial_u64(int k) {
  if (k < 0 || k > 20)
    throw std::invalid_argument("factorial only supported up to 20, got " +
                                std::to_string(k));
  std::uint64_t f = 1;
  for (int i = 2; i <= k; ++i) f *= static_cast<std::uint64_t>(i);
  return f;
}

/// Exact binomial coefficient, small arguments only.
inline std::uint64_t binomial_u64(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / i;
  return r;
}

/// Scalar standard error from accumulated complex first/second moments.
struct MeanAccumulator {
  cplx sum{0.0, 0.0};
  double sum_sq = 0.0;  // sum of |x|^2
  long count = 0;

  void add(cplx x) {
    sum += x;
    sum_sq += std::norm(x);
    ++count;
  }
  void merge(const MeanAccumulator& o) {
    sum += o.sum;
    sum_sq += o.sum_sq;
    count += o.count;
  }
  cplx mean() const { return sum / static_cast<double>(count); }
  double variance() const {
    if (count < 2) return 0.0;
    double v = (sum_sq - std::norm(sum) / count) / (count - 1);
    return std::max(v, 0.0);
  }
  double stderr_of_mean() const {
    return count > 0 ? std::sqrt(variance() / count) : 0.0;
  }
};

}  // namespace twistkac

#endif

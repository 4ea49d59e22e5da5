#ifndef TWISTKAC_OSCILLATOR_HPP
#define TWISTKAC_OSCILLATOR_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "twistkac/common.hpp"
#include "twistkac/twist_spec.hpp"

namespace twistkac {

// ---------------------------------------------------------------------------
// Closed forms for the twisted harmonic oscillator. Everything here is a pure
// function of a TwistSpec; gamma_j = exp(-m beta + i omega_j theta).
// ---------------------------------------------------------------------------

/// z_gamma = prod_j |1 - gamma_j|^{-2}.
inline double partition_function(const TwistSpec& spec) {
  spec.validate();
  require_nonsingular_measure(spec);
  double z = 1.0;
  for (int j = 0; j < spec.components(); ++j) z /= std::norm(1.0 - gamma(spec, j));
  return z;
}

/// Pair correlation kernel of one component on xi in [-beta, beta]:
///   C(xi) = (1/2m) [ g e^{-m xi}/(1-g) + conj(g) e^{m xi}/(1-conj(g)) + e^{-m|xi|} ].
inline cplx pair_correlation(const TwistSpec& spec, double xi, int j = 0) {
  spec.validate();
  if (spec.m <= 0.0)
    throw std::domain_error("pair_correlation: m = 0; use zero_mass_covariance");
  if (xi < -spec.beta - 1e-12 || xi > spec.beta + 1e-12)
    throw std::invalid_argument("pair_correlation: xi outside [-beta, beta]");
  const cplx g = gamma(spec, j);
  const double m = spec.m;
  return (g * std::exp(-m * xi) / (1.0 - g) +
          std::conj(g) * std::exp(m * xi) / (1.0 - std::conj(g)) +
          std::exp(-m * std::abs(xi))) /
         (2.0 * m);
}

inline std::vector<cplx> pair_correlation_all(const TwistSpec& spec, double xi) {
  std::vector<cplx> out(spec.components());
  for (int j = 0; j < spec.components(); ++j) out[j] = pair_correlation(spec, xi, j);
  return out;
}

/// Equal-time constant c_gamma = C(0) = (1/2m)(1-|g|^2)/|1-g|^2.
inline double equal_time_covariance(const TwistSpec& spec, int j = 0) {
  const cplx g = gamma(spec, j);
  return (1.0 - std::norm(g)) / std::norm(1.0 - g) / (2.0 * spec.m);
}

/// Complex-periodic extension evaluated on the strip n*beta <= Re xi < (n+1)*beta
/// with xi = n*beta + xi1:
///   FC(xi) = (e^{-i n w th}/2m) [ e^{-m conj(xi1)}/(1-g) + e^{m xi1} conj(g)/(1-conj(g)) ].
/// Periods: FC(xi + beta + i w th / m) = FC(xi) and FC(xi + beta) = e^{-i w th} FC(xi).
inline cplx pair_correlation_extended(const TwistSpec& spec, cplx xi, int j = 0) {
  spec.validate();
  if (spec.m <= 0.0)
    throw std::domain_error("pair_correlation_extended: requires m > 0");
  const double m = spec.m;
  const double wth = spec.weights.at(static_cast<std::size_t>(j)) * spec.theta;
  const cplx g = gamma(spec, j);
  const double nf = std::floor(xi.real() / spec.beta);
  const cplx xi1 = xi - nf * spec.beta;
  const cplx strip_phase = std::exp(cplx(0.0, -wth * nf));
  return strip_phase / (2.0 * m) *
         (std::exp(-m * std::conj(xi1)) / (1.0 - g) +
          std::exp(m * xi1) * std::conj(g) / (1.0 - std::conj(g)));
}

// ---------------------------------------------------------------------------
// Fourier side. The kernel expands over K_gamma = { (2 pi l - w th)/beta },
// with beta * C_hat(E) = 1/(E^2 + m^2). Paths live on the reflected set
// { (2 pi l + w th)/beta } so that omega(t + beta) = e^{i w th} omega(t).
// ---------------------------------------------------------------------------

/// n_modes consecutive kernel frequencies E_l = (2 pi l - w th)/beta,
/// l in [-n_modes/2, n_modes - n_modes/2).
inline std::vector<double> kernel_frequencies(const TwistSpec& spec, int j, int n_modes) {
  const double wth = spec.weights.at(static_cast<std::size_t>(j)) * spec.theta;
  std::vector<double> out(static_cast<std::size_t>(n_modes));
  const int l0 = -n_modes / 2;
  for (int i = 0; i < n_modes; ++i)
    out[static_cast<std::size_t>(i)] = (two_pi * (l0 + i) - wth) / spec.beta;
  return out;
}

/// Path-expansion frequencies F_l = (2 pi l + w th)/beta (the set -K_gamma).
inline std::vector<double> path_frequencies(const TwistSpec& spec, int j, int n_modes) {
  const double wth = spec.weights.at(static_cast<std::size_t>(j)) * spec.theta;
  std::vector<double> out(static_cast<std::size_t>(n_modes));
  const int l0 = -n_modes / 2;
  for (int i = 0; i < n_modes; ++i)
    out[static_cast<std::size_t>(i)] = (two_pi * (l0 + i) + wth) / spec.beta;
  return out;
}

/// beta * C_hat(E) = 1/(E^2 + m^2), with a membership check on E.
inline double fourier_coefficient(const TwistSpec& spec, double E, int j = 0,
                                  double tol = 1e-9) {
  const double wth = spec.weights.at(static_cast<std::size_t>(j)) * spec.theta;
  if (!phase_is_identity(spec.beta * E + wth, tol * std::max(1.0, spec.beta)))
    throw std::invalid_argument("fourier_coefficient: E not in the allowed set K_gamma");
  return 1.0 / (E * E + spec.m * spec.m);
}

/// Truncated Fourier synthesis of the kernel:
///   C(xi) ~ (1/beta) sum_{E in K_gamma, |l| window} e^{i E xi} / (E^2 + m^2).
inline cplx kernel_fourier_sum(const TwistSpec& spec, double xi, int j = 0,
                               int n_modes = 4096) {
  const double m2 = spec.m * spec.m;
  cplx acc = 0.0;
  for (double E : kernel_frequencies(spec, j, n_modes))
    acc += std::exp(cplx(0.0, E * xi)) / (E * E + m2);
  return acc / spec.beta;
}

/// Largest Fourier coefficient over K_gamma:
///   M = max{ ((w th/beta)^2 + m^2)^{-1}, (((2 pi - w th)/beta)^2 + m^2)^{-1} }
/// with w th reduced mod 2 pi.
inline double spectrum_bound(const TwistSpec& spec, int j = 0) {
  const double phi = reduce_angle(spec.weights.at(static_cast<std::size_t>(j)) * spec.theta);
  const double m2 = spec.m * spec.m;
  const double e_minus = phi / spec.beta;
  const double e_plus = (two_pi - phi) / spec.beta;
  return std::max(1.0 / (e_minus * e_minus + m2), 1.0 / (e_plus * e_plus + m2));
}

/// Truncation deficit of the equal-time constant:
///   C(0) - (1/beta) sum_{included modes} 1/(E^2 + m^2)  (nonnegative).
inline double covariance_truncation_deficit(const TwistSpec& spec, int j, int n_modes) {
  double partial = 0.0;
  const double m2 = spec.m * spec.m;
  for (double E : kernel_frequencies(spec, j, n_modes)) partial += 1.0 / (E * E + m2);
  partial /= spec.beta;
  const double full = spec.m > 0.0
                          ? equal_time_covariance(spec, j)
                          : [&] {
                              // m = 0 closed form: beta / (4 sin^2(w th / 2))
                              const double wth =
                                  spec.weights.at(static_cast<std::size_t>(j)) * spec.theta;
                              const double s = std::sin(0.5 * wth);
                              return spec.beta / (4.0 * s * s);
                            }();
  return std::max(full - partial, 0.0);
}

// ---------------------------------------------------------------------------
// Mass renormalization and the limiting kernels.
// ---------------------------------------------------------------------------

/// z(gamma, eps) = prod_j e^{beta (m - m')} |1-gamma_j|^2 / |1-gamma'_j|^2
/// with m' = sqrt(m^2 + eps^2).
inline double mass_renormalized_Z(const TwistSpec& spec, double eps) {
  spec.validate();
  if (spec.m <= 0.0) throw std::domain_error("mass_renormalized_Z: requires m > 0");
  if (eps < 0.0) throw std::invalid_argument("mass_renormalized_Z: eps must be >= 0");
  const double mp = std::sqrt(spec.m * spec.m + eps * eps);
  TwistSpec primed = spec;
  primed.m = mp;
  double z = 1.0;
  for (int j = 0; j < spec.components(); ++j)
    z *= std::exp(spec.beta * (spec.m - mp)) * std::norm(1.0 - gamma(spec, j)) /
         std::norm(1.0 - gamma(primed, j));
  return z;
}

/// m = 0 constant kernel beta / (4 sin^2(w th / 2)); acts only on the zero mode.
inline double zero_mass_covariance(const TwistSpec& spec, int j = 0) {
  spec.validate();
  const double wth = spec.weights.at(static_cast<std::size_t>(j)) * spec.theta;
  if (phase_is_identity(wth))
    throw std::domain_error("zero_mass_covariance: singular twist angle");
  const double s = std::sin(0.5 * wth);
  return spec.beta / (4.0 * s * s);
}

/// Bare-coordinate kernel m * C(xi); tends to (1/2) e^{-m |xi|} as gamma -> 0.
inline cplx bare_covariance(const TwistSpec& spec, double xi, int j = 0) {
  return spec.m * pair_correlation(spec, xi, j);
}

/// gamma -> 0 (beta -> infinity) limits, defined for any m >= 0.
inline double vacuum_covariance(double m, double xi) {
  if (m <= 0.0) throw std::domain_error("vacuum_covariance: requires m > 0");
  return std::exp(-m * std::abs(xi)) / (2.0 * m);
}
inline double vacuum_bare_covariance(double m, double xi) {
  return 0.5 * std::exp(-m * std::abs(xi));
}

}  // namespace twistkac

#endif

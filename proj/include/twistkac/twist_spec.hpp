#ifndef TWISTKAC_TWIST_SPEC_HPP
#define TWISTKAC_TWIST_SPEC_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "twistkac/common.hpp"

namespace twistkac {

/// Parameters of a twisted Gibbs ensemble: mass m >= 0, inverse temperature
/// beta > 0, twist angle theta, and per-component twist weights omega_j > 0.
/// The derived complex parameters are gamma_j = exp(-m*beta + i*omega_j*theta).
struct TwistSpec {
  double m = 1.0;
  double beta = 1.0;
  double theta = 0.0;
  std::vector<double> weights{1.0};
  std::optional<std::vector<double>> tau;  // spatial twist, field case only

  int components() const { return static_cast<int>(weights.size()); }

  void validate() const {
    if (!(m >= 0.0)) throw std::invalid_argument("TwistSpec: m must be >= 0");
    if (!(beta > 0.0)) throw std::invalid_argument("TwistSpec: beta must be > 0");
    if (weights.empty()) throw std::invalid_argument("TwistSpec: need at least one weight");
    for (double w : weights)
      if (!(w > 0.0)) throw std::invalid_argument("TwistSpec: weights must be > 0");
  }
};

inline TwistSpec make_spec(double m, double beta, double theta,
                           std::vector<double> weights = {1.0}) {
  TwistSpec s;
  s.m = m;
  s.beta = beta;
  s.theta = theta;
  s.weights = std::move(weights);
  s.validate();
  return s;
}

/// gamma_j = exp(-m*beta + i*omega_j*theta); |gamma_j| = e^{-m beta} <= 1.
inline cplx gamma(const TwistSpec& spec, int j) {
  const double w = spec.weights.at(static_cast<std::size_t>(j));
  return std::exp(cplx(-spec.m * spec.beta, w * spec.theta));
}

inline double gamma_modulus(const TwistSpec& spec) {
  return std::exp(-spec.m * spec.beta);
}

/// True iff some omega_j * theta lies within tolerance of 2*pi*Z.
inline bool is_singular(const TwistSpec& spec, double tol = singular_tol) {
  for (double w : spec.weights)
    if (phase_is_identity(w * spec.theta, tol)) return true;
  return false;
}

/// Throws unless the twisted free measure exists (m > 0, or m = 0 away from
/// the singular set).
inline void require_nonsingular_measure(const TwistSpec& spec) {
  if (spec.m <= 0.0 && is_singular(spec))
    throw std::domain_error("divergent partition function: m = 0 at a singular twist angle");
}

}  // namespace twistkac

#endif

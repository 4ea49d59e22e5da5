#ifndef TWISTKAC_POLYNOMIAL_HPP
#define TWISTKAC_POLYNOMIAL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "twistkac/common.hpp"
#include "twistkac/rng.hpp"

namespace twistkac {

using MultiIndex = std::vector<int>;
using ExponentPair = std::pair<MultiIndex, MultiIndex>;  // (a, b): z^a zbar^b

inline int total_degree(const ExponentPair& e) {
  int d = 0;
  for (int v : e.first) d += v;
  for (int v : e.second) d += v;
  return d;
}

/// Exact weight as a fraction, for the rational fast path of the
/// twist-invariance check.
struct Rational {
  long long num = 1;
  long long den = 1;
};

/// Real polynomial V(z, zbar) = sum c_{a,b} z^a zbar^b on C^n.
/// Coefficients are stored complex; reality of V means c_{a,b} = conj(c_{b,a}),
/// enforced by require_real().
struct PolyPotential {
  int n = 1;
  std::map<ExponentPair, cplx> monomials;
  bool asserted_bounded_below = false;
  std::optional<std::pair<double, double>> elliptic_constants;  // (M1, M2)
  std::optional<std::pair<double, double>> ir_constants;        // (M1, M2)

  void add_term(MultiIndex a, MultiIndex b, cplx c) {
    if (static_cast<int>(a.size()) != n || static_cast<int>(b.size()) != n)
      throw std::invalid_argument("PolyPotential: exponent length != n");
    for (int v : a)
      if (v < 0) throw std::invalid_argument("PolyPotential: negative exponent");
    for (int v : b)
      if (v < 0) throw std::invalid_argument("PolyPotential: negative exponent");
    auto key = ExponentPair(std::move(a), std::move(b));
    auto it = monomials.find(key);
    if (it == monomials.end())
      monomials.emplace(std::move(key), c);
    else
      it->second += c;
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("PolyPotential: n must be >= 1");
    if (monomials.empty())
      throw std::invalid_argument("PolyPotential: empty polynomial rejected");
  }

  bool is_real(double tol = 1e-12) const {
    double scale = 0.0;
    for (const auto& [e, c] : monomials) scale = std::max(scale, std::abs(c));
    for (const auto& [e, c] : monomials) {
      auto it = monomials.find(ExponentPair(e.second, e.first));
      cplx mirror = it == monomials.end() ? cplx(0.0) : it->second;
      if (std::abs(c - std::conj(mirror)) > tol * std::max(1.0, scale)) return false;
    }
    return true;
  }

  void require_real() const {
    if (!is_real()) throw std::invalid_argument("PolyPotential: V is not real-valued");
  }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : monomials) d = std::max(d, total_degree(e));
    return d;
  }

  cplx evaluate(std::span<const cplx> z) const {
    if (static_cast<int>(z.size()) != n)
      throw std::invalid_argument("PolyPotential::evaluate: wrong point dimension");
    cplx acc = 0.0;
    for (const auto& [e, c] : monomials) {
      cplx term = c;
      for (int j = 0; j < n; ++j) {
        for (int p = 0; p < e.first[j]; ++p) term *= z[j];
        for (int p = 0; p < e.second[j]; ++p) term *= std::conj(z[j]);
      }
      acc += term;
    }
    return acc;
  }

  double evaluate_real(std::span<const cplx> z) const { return evaluate(z).real(); }

  PolyPotential scaled(double lambda) const {
    PolyPotential out = *this;
    for (auto& [e, c] : out.monomials) c *= lambda;
    return out;
  }

  /// sum_j d^2 V / dz_j dzbar_j, computed term by term on exponents.
  PolyPotential laplacian() const {
    PolyPotential out;
    out.n = n;
    for (const auto& [e, c] : monomials) {
      for (int j = 0; j < n; ++j) {
        if (e.first[j] == 0 || e.second[j] == 0) continue;
        MultiIndex a = e.first, b = e.second;
        const double factor = a[j] * b[j];
        --a[j];
        --b[j];
        out.add_term(std::move(a), std::move(b), factor * c);
      }
    }
    if (out.monomials.empty()) out.add_term(MultiIndex(n, 0), MultiIndex(n, 0), 0.0);
    return out;
  }
};

/// Holomorphic polynomial W(z) = sum c_a z^a with quasihomogeneity weights.
struct Superpotential {
  int n = 1;
  std::map<MultiIndex, cplx> monomials;
  std::vector<double> weights;

  void add_term(MultiIndex a, cplx c) {
    if (static_cast<int>(a.size()) != n)
      throw std::invalid_argument("Superpotential: exponent length != n");
    monomials[std::move(a)] += c;
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("Superpotential: n must be >= 1");
    if (monomials.empty()) throw std::invalid_argument("Superpotential: empty polynomial");
    if (static_cast<int>(weights.size()) != n)
      throw std::invalid_argument("Superpotential: weights length != n");
  }

  /// Quasihomogeneity: every monomial satisfies sum_j omega_j a_j = 1.
  bool is_quasihomogeneous(double tol = 1e-9) const {
    for (const auto& [a, c] : monomials) {
      if (std::abs(c) == 0.0) continue;
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += weights[j] * a[j];
      if (std::abs(s - 1.0) > tol) return false;
    }
    return true;
  }
};

/// Twist invariance: every monomial satisfies sum_j omega_j (a_j - b_j) = 0.
/// Exponent arithmetic is exact; the weight combination carries a tolerance.
inline bool check_twist_invariance(const PolyPotential& V,
                                   const std::vector<double>& weights,
                                   double tol = 1e-9) {
  if (static_cast<int>(weights.size()) != V.n)
    throw std::invalid_argument("check_twist_invariance: weights length != n");
  for (const auto& [e, c] : V.monomials) {
    if (std::abs(c) == 0.0) continue;
    double s = 0.0, scale = 0.0;
    for (int j = 0; j < V.n; ++j) {
      s += weights[j] * (e.first[j] - e.second[j]);
      scale += std::abs(weights[j]) * std::abs(e.first[j] - e.second[j]);
    }
    if (std::abs(s) > tol * std::max(1.0, scale)) return false;
  }
  return true;
}

/// Rational fast path: with weights p_j/q_j the charge of a monomial is an
/// exact integer combination, so invariance is decided with no tolerance.
inline bool check_twist_invariance_exact(const PolyPotential& V,
                                         const std::vector<Rational>& weights) {
  if (static_cast<int>(weights.size()) != V.n)
    throw std::invalid_argument("check_twist_invariance_exact: weights length != n");
  long long lcm = 1;
  for (const auto& w : weights) {
    if (w.den == 0) throw std::invalid_argument("rational weight with zero denominator");
    lcm = std::lcm(lcm, std::llabs(w.den));
  }
  for (const auto& [e, c] : V.monomials) {
    if (std::abs(c) == 0.0) continue;
    long long s = 0;
    for (int j = 0; j < V.n; ++j)
      s += weights[j].num * (lcm / weights[j].den) * (e.first[j] - e.second[j]);
    if (s != 0) return false;
  }
  return true;
}

/// V(z, zbar) = sum_k |dW/dz_k|^2, expanded to a real polynomial.
inline PolyPotential grad_squared(const Superpotential& W) {
  W.validate();
  PolyPotential V;
  V.n = W.n;
  // dW/dz_k = sum_a c_a a_k z^{a - e_k}
  for (int k = 0; k < W.n; ++k) {
    std::vector<std::pair<MultiIndex, cplx>> deriv;
    for (const auto& [a, c] : W.monomials) {
      if (a[k] == 0) continue;
      MultiIndex d = a;
      --d[k];
      deriv.emplace_back(std::move(d), c * static_cast<double>(a[k]));
    }
    for (const auto& [a1, c1] : deriv)
      for (const auto& [a2, c2] : deriv) V.add_term(a1, a2, c1 * std::conj(c2));
  }
  if (V.monomials.empty()) V.add_term(MultiIndex(V.n, 0), MultiIndex(V.n, 0), 0.0);
  V.asserted_bounded_below = true;  // a sum of absolute squares
  return V;
}

struct PotentialReport {
  bool allowed = false;
  bool elliptic = false;
  bool ir_regular = false;
  bool twist_invariant = false;
  bool scan_bounded_below = false;
  std::string detail;
  std::vector<cplx> witness;  // point where a predicate failed, if any
};

namespace detail {

/// Deterministic scan directions: coordinate axes, i-rotated axes, and a
/// batch of pseudo-random unit vectors.
inline std::vector<std::vector<cplx>> scan_directions(int n, int n_random = 64) {
  std::vector<std::vector<cplx>> dirs;
  for (int j = 0; j < n; ++j) {
    std::vector<cplx> d(n, 0.0);
    d[j] = 1.0;
    dirs.push_back(d);
    d[j] = cplx(0.0, 1.0);
    dirs.push_back(d);
    d[j] = cplx(std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2);
    dirs.push_back(std::move(d));
  }
  CounterRng rng(0x7f3a21u, 1);
  for (int r = 0; r < n_random; ++r) {
    std::vector<cplx> d(n);
    double norm2 = 0.0;
    for (auto& v : d) {
      v = rng.next_complex_normal();
      norm2 += std::norm(v);
    }
    const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-300));
    for (auto& v : d) v *= inv;
    dirs.push_back(std::move(d));
  }
  return dirs;
}

inline std::vector<double> scan_radii(double r_max, int count = 48) {
  std::vector<double> rs{0.0};
  const double r_min = 1e-2;
  for (int i = 0; i < count; ++i)
    rs.push_back(r_min * std::pow(r_max / r_min, static_cast<double>(i) / (count - 1)));
  return rs;
}

}  // namespace detail

/// Checks allowed / elliptic / infrared-regular on a radial sample grid.
/// Boundedness below is certified only as: the scan finds no decreasing tail
/// on any sampled ray AND the caller asserted it; deciding polynomial
/// nonnegativity symbolically is out of scope.
inline PotentialReport validate_potential(const PolyPotential& V,
                                          const std::vector<double>& weights) {
  V.validate();
  PotentialReport rep;
  if (!V.is_real()) {
    rep.detail = "V is not real-valued";
    return rep;
  }
  rep.twist_invariant = check_twist_invariance(V, weights);

  // Radius beyond which the top-degree part should dominate.
  double low_l1 = 0.0, top_linf = 0.0;
  const int deg = V.degree();
  for (const auto& [e, c] : V.monomials) {
    if (total_degree(e) == deg)
      top_linf = std::max(top_linf, std::abs(c));
    else
      low_l1 += std::abs(c);
  }
  double r_max = 8.0 * std::max(1.0, low_l1 / std::max(top_linf, 1e-12));
  r_max = std::min(r_max, 1e3);

  const auto dirs = detail::scan_directions(V.n);
  const auto radii = detail::scan_radii(r_max);

  // A ray whose value at r_max is negative and below its value at r_max/2 is
  // a decreasing negative tail: the polynomial cannot be bounded below there.
  rep.scan_bounded_below = true;
  std::vector<cplx> pt(V.n);
  for (const auto& d : dirs) {
    for (int j = 0; j < V.n; ++j) pt[j] = 0.5 * r_max * d[j];
    const double v_mid = V.evaluate_real(pt);
    for (int j = 0; j < V.n; ++j) pt[j] = r_max * d[j];
    const double v_end = V.evaluate_real(pt);
    if (v_end < 0.0 && v_end < v_mid - 1e-9 * (1.0 + std::abs(v_mid))) {
      rep.scan_bounded_below = false;
      rep.witness.assign(pt.begin(), pt.end());
      rep.detail = "scan found a decreasing negative tail";
      break;
    }
  }
  rep.allowed = rep.twist_invariant && rep.scan_bounded_below && V.asserted_bounded_below;
  if (!rep.allowed && rep.detail.empty()) {
    if (!rep.twist_invariant)
      rep.detail = "not twist-invariant for the given weights";
    else if (!V.asserted_bounded_below)
      rep.detail = "bounded-below assertion missing";
  }

  // Ellipticity: |z|^2 <= M1 (V + M2) on the sample grid.
  if (V.elliptic_constants) {
    const auto [M1, M2] = *V.elliptic_constants;
    rep.elliptic = true;
    for (const auto& d : dirs) {
      for (double r : radii) {
        for (int j = 0; j < V.n; ++j) pt[j] = r * d[j];
        const double lhs = r * r;
        const double rhs = M1 * (V.evaluate_real(pt) + M2);
        if (lhs > rhs + 1e-9 * (1.0 + std::abs(rhs))) {
          rep.elliptic = false;
          rep.witness.assign(pt.begin(), pt.end());
          rep.detail = "ellipticity bound violated at |z| = " + std::to_string(r);
          break;
        }
      }
      if (!rep.elliptic) break;
    }
  }

  // Infrared regularity: |Laplacian V| <= M1 (V + M2) on the sample grid.
  if (V.ir_constants) {
    const auto [M1, M2] = *V.ir_constants;
    const PolyPotential lap = V.laplacian();
    rep.ir_regular = true;
    for (const auto& d : dirs) {
      for (double r : radii) {
        for (int j = 0; j < V.n; ++j) pt[j] = r * d[j];
        const double lhs = std::abs(lap.evaluate_real(pt));
        const double rhs = M1 * (V.evaluate_real(pt) + M2);
        if (lhs > rhs + 1e-9 * (1.0 + std::abs(rhs))) {
          rep.ir_regular = false;
          rep.witness.assign(pt.begin(), pt.end());
          rep.detail = "infrared bound violated at |z| = " + std::to_string(r);
          break;
        }
      }
      if (!rep.ir_regular) break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// JSON schema: {"n":..., "monomials":[{"a":[...],"b":[...],"c":...}, ...]}
// Complex coefficients carry an optional "c_im".
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const PolyPotential& V) {
  nlohmann::json j;
  j["n"] = V.n;
  j["monomials"] = nlohmann::json::array();
  for (const auto& [e, c] : V.monomials) {
    nlohmann::json m;
    m["a"] = e.first;
    m["b"] = e.second;
    m["c"] = c.real();
    if (c.imag() != 0.0) m["c_im"] = c.imag();
    j["monomials"].push_back(std::move(m));
  }
  j["asserted_bounded_below"] = V.asserted_bounded_below;
  if (V.elliptic_constants)
    j["elliptic_constants"] = {V.elliptic_constants->first, V.elliptic_constants->second};
  if (V.ir_constants) j["ir_constants"] = {V.ir_constants->first, V.ir_constants->second};
  return j;
}

inline PolyPotential potential_from_json(const nlohmann::json& j) {
  PolyPotential V;
  V.n = j.at("n").get<int>();
  for (const auto& m : j.at("monomials")) {
    MultiIndex a = m.at("a").get<MultiIndex>();
    MultiIndex b = m.at("b").get<MultiIndex>();
    cplx c(m.at("c").get<double>(), m.value("c_im", 0.0));
    V.add_term(std::move(a), std::move(b), c);
  }
  V.asserted_bounded_below = j.value("asserted_bounded_below", false);
  if (j.contains("elliptic_constants"))
    V.elliptic_constants = {j["elliptic_constants"][0].get<double>(),
                            j["elliptic_constants"][1].get<double>()};
  if (j.contains("ir_constants"))
    V.ir_constants = {j["ir_constants"][0].get<double>(), j["ir_constants"][1].get<double>()};
  V.validate();
  return V;
}

inline nlohmann::json to_json(const Superpotential& W) {
  nlohmann::json j;
  j["n"] = W.n;
  j["weights"] = W.weights;
  j["monomials"] = nlohmann::json::array();
  for (const auto& [a, c] : W.monomials) {
    nlohmann::json m;
    m["a"] = a;
    m["c"] = c.real();
    if (c.imag() != 0.0) m["c_im"] = c.imag();
    j["monomials"].push_back(std::move(m));
  }
  return j;
}

inline Superpotential superpotential_from_json(const nlohmann::json& j) {
  Superpotential W;
  W.n = j.at("n").get<int>();
  W.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& m : j.at("monomials")) {
    MultiIndex a = m.at("a").get<MultiIndex>();
    cplx c(m.at("c").get<double>(), m.value("c_im", 0.0));
    W.add_term(std::move(a), c);
  }
  W.validate();
  return W;
}

// Convenience builders for the common one-component cases.
inline PolyPotential abs2_potential(int n = 1, double coeff = 1.0) {
  PolyPotential V;
  V.n = n;
  for (int j = 0; j < n; ++j) {
    MultiIndex a(n, 0), b(n, 0);
    a[j] = b[j] = 1;
    V.add_term(std::move(a), std::move(b), coeff);
  }
  V.asserted_bounded_below = coeff >= 0.0;
  if (coeff > 0.0) {
    // |z|^2 = (1/coeff) V exactly; the Laplacian is the constant n coeff
    V.elliptic_constants = {1.0 / coeff, 0.0};
    V.ir_constants = {1.0 / coeff, n * coeff * coeff};
  }
  return V;
}

/// lambda * (|z|^2)^2 with |z|^2 = sum_j |z_j|^2.
inline PolyPotential quartic_potential(int n = 1, double lambda = 1.0) {
  PolyPotential V;
  V.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MultiIndex a(n, 0), b(n, 0);
      ++a[i];
      ++b[i];
      ++a[j];
      ++b[j];
      V.add_term(std::move(a), std::move(b), lambda);
    }
  V.asserted_bounded_below = lambda >= 0.0;
  if (lambda > 0.0) {
    // With x = |z|^2: x <= M1 (lambda x^2 + M2) and the Laplacian bound
    // 2(n+1) lambda x <= M1' (lambda x^2 + M2') hold for all x >= 0
    // with these choices (lambda <= 4).
    V.elliptic_constants = {std::max(1.0, 1.0 / lambda), 1.0};
    V.ir_constants = {2.0 * (n + 1), 1.0};
  }
  return V;
}

}  // namespace twistkac

#endif

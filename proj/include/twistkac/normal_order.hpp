#ifndef TWISTKAC_NORMAL_ORDER_HPP
#define TWISTKAC_NORMAL_ORDER_HPP

#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "twistkac/common.hpp"
#include "twistkac/polynomial.hpp"

namespace twistkac {

// ---------------------------------------------------------------------------
// Normal ordering relative to a Gaussian functional with equal-time constants
// c_j: the map P -> e^{-Delta_c} P with Delta_c = sum_j c_j d_j dbar_j.
// The same coefficient map serves operator monomials z^a zbar^b and path
// monomials omega^a conj(omega)^b.
// ---------------------------------------------------------------------------

using MonomialMap = std::map<ExponentPair, cplx>;

/// Polynomial together with the ordering constants it was ordered against.
struct OrderedPolynomial {
  int n = 1;
  MonomialMap monomials;
  std::vector<double> ordering_constants;

  cplx evaluate(std::span<const cplx> z) const {
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
};

namespace detail {

/// One application of Delta_c = sum_j c_j d_j dbar_j on a monomial map.
inline MonomialMap apply_c_laplacian(const MonomialMap& p, std::span<const double> c) {
  MonomialMap out;
  for (const auto& [e, coeff] : p) {
    const int n = static_cast<int>(e.first.size());
    for (int j = 0; j < n; ++j) {
      if (e.first[j] == 0 || e.second[j] == 0 || c[j] == 0.0) continue;
      MultiIndex a = e.first, b = e.second;
      const double factor = c[j] * a[j] * b[j];
      --a[j];
      --b[j];
      out[ExponentPair(std::move(a), std::move(b))] += factor * coeff;
    }
  }
  return out;
}

inline int map_degree(const MonomialMap& p) {
  int d = 0;
  for (const auto& [e, c] : p) d = std::max(d, total_degree(e));
  return d;
}

/// e^{sign * Delta_c} P, exact at polynomial level: the series terminates
/// because each Delta_c application drops the degree by two.
inline MonomialMap exp_c_laplacian(MonomialMap p, std::span<const double> c, double sign) {
  if (map_degree(p) > 20)
    throw std::invalid_argument("normal ordering limited to degree <= 20");
  MonomialMap result = p;
  MonomialMap term = std::move(p);
  for (int k = 1; !term.empty(); ++k) {
    term = apply_c_laplacian(term, c);
    const double coeff = sign / static_cast<double>(k);
    for (auto& [e, v] : term) v *= coeff;
    for (const auto& [e, v] : term) result[e] += v;
  }
  // drop exact zeros produced by cancellations
  for (auto it = result.begin(); it != result.end();)
    it = (it->second == cplx(0.0)) ? result.erase(it) : std::next(it);
  return result;
}

}  // namespace detail

/// :P: = e^{-Delta_c} P.
inline OrderedPolynomial normal_order(const PolyPotential& P, std::vector<double> c) {
  P.validate();
  if (static_cast<int>(c.size()) != P.n)
    throw std::invalid_argument("normal_order: constants length != n");
  OrderedPolynomial out;
  out.n = P.n;
  out.ordering_constants = std::move(c);
  out.monomials = detail::exp_c_laplacian(P.monomials, out.ordering_constants, -1.0);
  return out;
}

/// Inverse map e^{+Delta_c}, back to the unordered polynomial.
inline PolyPotential unorder(const OrderedPolynomial& P) {
  PolyPotential out;
  out.n = P.n;
  auto m = detail::exp_c_laplacian(P.monomials, P.ordering_constants, +1.0);
  for (auto& [e, v] : m) out.add_term(e.first, e.second, v);
  if (out.monomials.empty())
    out.add_term(MultiIndex(out.n, 0), MultiIndex(out.n, 0), 0.0);
  return out;
}

/// Single-component ordered monomial :zbar^r z^s: as an explicit map,
/// sum_j (-1)^j (r choose j)(s choose j) j! c^j zbar^{r-j} z^{s-j}.
inline OrderedPolynomial normal_order_monomial(int r, int s, double c) {
  if (r < 0 || s < 0 || r + s > 20)
    throw std::invalid_argument("normal_order_monomial: degree out of range");
  PolyPotential P;
  P.n = 1;
  P.add_term({s}, {r}, 1.0);  // z^s zbar^r
  return normal_order(P, {c});
}

/// < :zbar(t)^r z(t)^s: :zbar(t')^r' z(t')^s': >
///   = delta_{r s'} delta_{s r'} r! s! C(t-t')^r C(t'-t)^s,
/// with C_ts = C(t-t') and C_st = C(t'-t).
inline cplx ordered_two_point(int r, int s, int rp, int sp, cplx C_ts, cplx C_st) {
  if (r != sp || s != rp) return 0.0;
  cplx out = static_cast<double>(factorial_u64(r)) * static_cast<double>(factorial_u64(s));
  for (int i = 0; i < r; ++i) out *= C_ts;
  for (int i = 0; i < s; ++i) out *= C_st;
  return out;
}

/// Multicomponent diagonal case:
///   < :|z(t)|^{2k}: :|z(s)|^{2k'}: >
///   = delta_{kk'} (k!)^2 sum_{k_1+...+k_n=k} prod_j |C_j(t-s)|^{2 k_j}.
inline cplx ordered_diagonal_two_point(int k, int kp, std::span<const cplx> C_components) {
  if (k != kp) return 0.0;
  if (k < 0 || k > 20) throw std::invalid_argument("ordered_diagonal_two_point: k out of range");
  const int n = static_cast<int>(C_components.size());
  if (n < 1) throw std::invalid_argument("ordered_diagonal_two_point: need components");
  std::vector<double> mod2(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) mod2[static_cast<std::size_t>(j)] = std::norm(C_components[j]);
  // sum over compositions of k into n nonnegative parts
  double total = 0.0;
  std::vector<int> parts(static_cast<std::size_t>(n), 0);
  auto recurse = [&](auto&& self, int pos, int remaining, double prod) -> void {
    if (pos == n - 1) {
      total += prod * std::pow(mod2[static_cast<std::size_t>(pos)], remaining);
      return;
    }
    double p = 1.0;
    for (int kj = 0; kj <= remaining; ++kj) {
      self(self, pos + 1, remaining - kj, prod * p);
      p *= mod2[static_cast<std::size_t>(pos)];
    }
  };
  recurse(recurse, 0, k, 1.0);
  const double kf = static_cast<double>(factorial_u64(k));
  return kf * kf * total;
}

/// :|z|^{2k}: for the n-component |z|^2 = sum_j |z_j|^2 with constants c_j.
inline OrderedPolynomial normal_order_abs_power(int n, int k, std::vector<double> c) {
  PolyPotential P;
  P.n = n;
  // expand (sum_j z_j zbar_j)^k by multinomials
  std::vector<int> parts(static_cast<std::size_t>(n), 0);
  auto recurse = [&](auto&& self, int pos, int remaining) -> void {
    if (pos == n - 1) {
      parts[static_cast<std::size_t>(pos)] = remaining;
      double coeff = static_cast<double>(factorial_u64(k));
      MultiIndex a(n), b(n);
      for (int j = 0; j < n; ++j) {
        coeff /= static_cast<double>(factorial_u64(parts[static_cast<std::size_t>(j)]));
        a[j] = b[j] = parts[static_cast<std::size_t>(j)];
      }
      P.add_term(std::move(a), std::move(b), coeff);
      return;
    }
    for (int kj = 0; kj <= remaining; ++kj) {
      parts[static_cast<std::size_t>(pos)] = kj;
      self(self, pos + 1, remaining - kj);
    }
  };
  if (k == 0)
    P.add_term(MultiIndex(n, 0), MultiIndex(n, 0), 1.0);
  else
    recurse(recurse, 0, k);
  return normal_order(P, std::move(c));
}

}  // namespace twistkac

#endif

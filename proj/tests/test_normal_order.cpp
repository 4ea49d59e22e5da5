#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "twistkac/normal_order.hpp"
#include "twistkac/rng.hpp"

#include "oracles.hpp"

using namespace twistkac;
using Catch::Approx;

namespace {
cplx coeff_of(const MonomialMap& m, MultiIndex a, MultiIndex b) {
  auto it = m.find(ExponentPair(std::move(a), std::move(b)));
  return it == m.end() ? cplx(0.0) : it->second;
}
}  // namespace

TEST_CASE("ordered |z|^4 (one component)") {
  const double c = 0.7;
  auto p = normal_order_monomial(2, 2, c);
  CHECK(coeff_of(p.monomials, {2}, {2}).real() == Approx(1.0));
  CHECK(coeff_of(p.monomials, {1}, {1}).real() == Approx(-4.0 * c));
  CHECK(coeff_of(p.monomials, {0}, {0}).real() == Approx(2.0 * c * c));
  CHECK(p.monomials.size() == 3);
}

TEST_CASE("ordered |z|^6 (one component)") {
  const double c = 1.3;
  auto p = normal_order_monomial(3, 3, c);
  CHECK(coeff_of(p.monomials, {3}, {3}).real() == Approx(1.0));
  CHECK(coeff_of(p.monomials, {2}, {2}).real() == Approx(-9.0 * c));
  CHECK(coeff_of(p.monomials, {1}, {1}).real() == Approx(18.0 * c * c));
  CHECK(coeff_of(p.monomials, {0}, {0}).real() == Approx(-6.0 * c * c * c));
}

TEST_CASE("purely holomorphic monomials are unchanged") {
  auto p = normal_order_monomial(0, 5, 2.2);
  REQUIRE(p.monomials.size() == 1);
  CHECK(coeff_of(p.monomials, {5}, {0}).real() == Approx(1.0));
}

TEST_CASE("ordered |z|^2 and |z|^4 with n equal components") {
  for (int n : {2, 3}) {
    const double c = 0.9;
    auto p2 = normal_order_abs_power(n, 1, std::vector<double>(n, c));
    CHECK(coeff_of(p2.monomials, MultiIndex(n, 0), MultiIndex(n, 0)).real() ==
          Approx(-n * c));

    auto p4 = normal_order_abs_power(n, 2, std::vector<double>(n, c));
    // |z|^4 - 2(n+1) c |z|^2 + n(n+1) c^2
    CHECK(coeff_of(p4.monomials, MultiIndex(n, 0), MultiIndex(n, 0)).real() ==
          Approx(n * (n + 1) * c * c));
    MultiIndex e1(n, 0);
    e1[0] = 1;
    CHECK(coeff_of(p4.monomials, e1, e1).real() == Approx(-2.0 * (n + 1) * c));
  }
}

TEST_CASE("unequal constants reproduce the two-component quartic expansion") {
  // :(|z|^2)^2: = |z|^4 - 2 c_frak |z|^2 + c_frak^2 - 2 sum c_j |z_j|^2 + c2_frak
  const std::vector<double> c{0.4, 1.1};
  const double cf = c[0] + c[1];
  const double c2 = c[0] * c[0] + c[1] * c[1];
  auto p = normal_order_abs_power(2, 2, c);
  CHECK(coeff_of(p.monomials, {0, 0}, {0, 0}).real() == Approx(cf * cf + c2));
  // |z_1|^2 coefficient: -2 c_frak - 2 c_1
  CHECK(coeff_of(p.monomials, {1, 0}, {1, 0}).real() == Approx(-2.0 * cf - 2.0 * c[0]));
  CHECK(coeff_of(p.monomials, {0, 1}, {0, 1}).real() == Approx(-2.0 * cf - 2.0 * c[1]));
}

TEST_CASE("ordering and unordering are inverse maps") {
  CounterRng rng(17, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 3);
    PolyPotential P;
    P.n = n;
    for (int t = 0; t < 6; ++t) {
      MultiIndex a(n, 0), b(n, 0);
      int budget = 8;
      for (int j = 0; j < n; ++j) {
        a[j] = static_cast<int>(rng.next_u64() % 3);
        b[j] = static_cast<int>(rng.next_u64() % 3);
        budget -= a[j] + b[j];
      }
      if (budget < 0) continue;
      P.add_term(std::move(a), std::move(b), cplx(rng.next_normal(), rng.next_normal()));
    }
    if (P.monomials.empty()) continue;
    std::vector<double> c;
    for (int j = 0; j < n; ++j) c.push_back(0.2 + rng.next_uniform_co());
    const PolyPotential back = unorder(normal_order(P, c));
    double scale = 0.0;
    for (const auto& [e, v] : P.monomials) scale = std::max(scale, std::abs(v));
    for (const auto& [e, v] : P.monomials) {
      auto it = back.monomials.find(e);
      REQUIRE(it != back.monomials.end());
      CHECK(std::abs(it->second - v) < 1e-12 * scale);
    }
    for (const auto& [e, v] : back.monomials)
      if (!P.monomials.count(e)) CHECK(std::abs(v) < 1e-12 * scale);
  }
}

TEST_CASE("ordered two-point function deltas and values") {
  const cplx Cts(0.8, 0.3), Cst(0.8, -0.3);
  CHECK(ordered_two_point(2, 1, 1, 1, Cts, Cst) == cplx(0.0));
  CHECK(ordered_two_point(1, 2, 1, 2, Cts, Cst) == cplx(0.0));  // needs r=s', s=r'
  // r=s=r'=s'=1 at equal times: 1! 1! C(0)^2
  const cplx c0(1.5, 0.0);
  CHECK(std::abs(ordered_two_point(1, 1, 1, 1, c0, c0) - c0 * c0) < 1e-15);
  // r! s! C_ts^r C_st^s
  const cplx v = ordered_two_point(2, 1, 1, 2, Cts, Cst);
  CHECK(std::abs(v - 2.0 * Cts * Cts * Cst) < 1e-15);
}

TEST_CASE("expectation of a single ordered monomial vanishes") {
  // <:zbar^r z^s:> is the two-point value against the empty monomial
  for (int r = 0; r <= 3; ++r)
    for (int s = 0; s <= 3; ++s) {
      const cplx v = ordered_two_point(r, s, 0, 0, cplx(0.9, 0.1), cplx(0.9, -0.1));
      if (r == 0 && s == 0)
        CHECK(v == cplx(1.0));
      else
        CHECK(v == cplx(0.0));
    }
}

TEST_CASE("multicomponent diagonal two-point") {
  const std::vector<cplx> C{cplx(0.6, 0.2), cplx(0.4, -0.1)};
  CHECK(ordered_diagonal_two_point(1, 2, C) == cplx(0.0));
  // n = 2, k = 1: |C1|^2 + |C2|^2
  CHECK(ordered_diagonal_two_point(1, 1, C).real() ==
        Approx(std::norm(C[0]) + std::norm(C[1])));
  // n = 1 reduces to (k!)^2 |C|^{2k}
  const std::vector<cplx> single{cplx(0.7, 0.4)};
  for (int k = 0; k <= 4; ++k) {
    const double expect = std::pow(static_cast<double>(factorial_u64(k)), 2) *
                          std::pow(std::norm(single[0]), k);
    CHECK(ordered_diagonal_two_point(k, k, single).real() == Approx(expect));
  }
}

TEST_CASE("compositions sum agrees with the symmetric-function recursion") {
  CounterRng rng(29, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 4);
    const int k = static_cast<int>(rng.next_u64() % 5);
    std::vector<cplx> C;
    std::vector<double> mods;
    for (int j = 0; j < n; ++j) {
      C.emplace_back(rng.next_normal(), rng.next_normal());
      mods.push_back(std::norm(C.back()));
    }
    const double kf = static_cast<double>(factorial_u64(k));
    const double expect = kf * kf * oracles::complete_homogeneous(mods, k);
    CHECK(ordered_diagonal_two_point(k, k, C).real() == Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("degree limit is enforced") {
  PolyPotential big;
  big.n = 1;
  big.add_term({11}, {11}, 1.0);
  CHECK_THROWS_AS(normal_order(big, {1.0}), std::invalid_argument);
  CHECK_THROWS_AS(factorial_u64(21), std::invalid_argument);
}

TEST_CASE("evaluation of ordered polynomials") {
  const double c = 0.8;
  auto p = normal_order_monomial(2, 2, c);
  CounterRng rng(3, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const cplx z(rng.next_normal(), rng.next_normal());
    const double direct =
        std::norm(z) * std::norm(z) - 4.0 * c * std::norm(z) + 2.0 * c * c;
    std::vector<cplx> pt{z};
    CHECK(p.evaluate(pt).real() == Approx(direct).epsilon(1e-12));
  }
}

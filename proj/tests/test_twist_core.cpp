#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <sstream>

#include "twistkac/polynomial.hpp"
#include "twistkac/rng.hpp"
#include "twistkac/twist_spec.hpp"

#include "oracles.hpp"

using namespace twistkac;
using Catch::Approx;

TEST_CASE("gamma closed forms") {
  CHECK(gamma(make_spec(1.0, std::log(2.0), 0.0), 0).real() == Approx(0.5));
  CHECK(gamma(make_spec(1.0, std::log(2.0), 0.0), 0).imag() == Approx(0.0).margin(1e-15));

  const cplx g = gamma(make_spec(0.0, 1.0, std::numbers::pi), 0);
  CHECK(g.real() == Approx(-1.0));
  CHECK(g.imag() == Approx(0.0).margin(1e-15));

  const cplx g2 = gamma(make_spec(1.0, 1.0, std::numbers::pi / 2, {2.0}), 0);
  CHECK(g2.real() == Approx(-std::exp(-1.0)));
  CHECK(g2.imag() == Approx(0.0).margin(1e-15));
}

TEST_CASE("gamma modulus is e^{-m beta} for every component") {
  CounterRng rng(123, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const double m = 0.1 + 3.0 * rng.next_uniform_co();
    const double beta = 0.2 + 2.0 * rng.next_uniform_co();
    const double theta = 10.0 * (rng.next_uniform_co() - 0.5);
    std::vector<double> w{0.3 + rng.next_uniform_co(), 1.0 + rng.next_uniform_co(),
                          2.0 + rng.next_uniform_co()};
    const auto spec = make_spec(m, beta, theta, w);
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(gamma(spec, j)) == Approx(std::exp(-m * beta)).epsilon(1e-13));
  }
}

TEST_CASE("singular set membership") {
  CHECK(is_singular(make_spec(1.0, 1.0, 0.0)));
  CHECK_FALSE(is_singular(make_spec(1.0, 1.0, std::numbers::pi)));
  CHECK(is_singular(make_spec(1.0, 1.0, 2.0 * std::numbers::pi / 3.0, {3.0})));
}

TEST_CASE("singular set is periodic with the group period for commensurate weights") {
  // weights 1/2 and 1/3: h = 6 is the minimal h with h w_j integer
  const std::vector<double> w{0.5, 1.0 / 3.0};
  const double period = two_pi * 6.0;
  CounterRng rng(7, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const double theta = 40.0 * (rng.next_uniform_co() - 0.5);
    CHECK(is_singular(make_spec(1.0, 1.0, theta, w)) ==
          is_singular(make_spec(1.0, 1.0, theta + period, w)));
  }
}

TEST_CASE("spec validation rejects degenerate input") {
  TwistSpec s;
  s.weights.clear();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_spec(1.0, -1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_spec(-1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_spec(1.0, 1.0, 0.0, {0.0}), std::invalid_argument);
}

TEST_CASE("twist invariance of monomials") {
  PolyPotential abs2 = abs2_potential(1);
  CHECK(check_twist_invariance(abs2, {1.0}));
  CHECK(check_twist_invariance(abs2, {0.37}));

  PolyPotential zsq;
  zsq.n = 1;
  zsq.add_term({2}, {0}, 1.0);
  CHECK_FALSE(check_twist_invariance(zsq, {1.0}));
  CHECK_FALSE(zsq.is_real());

  PolyPotential mixed;
  mixed.n = 2;
  mixed.add_term({1, 2}, {1, 2}, 1.0);  // |z1|^2 |z2|^4
  CHECK(check_twist_invariance(mixed, {1.0, 0.77}));
  CHECK(check_twist_invariance(mixed, {0.1, 5.3}));
}

TEST_CASE("rational weight fast path is exact") {
  PolyPotential V;
  V.n = 2;
  // charge: 2*(1/3) - 1*(2/3) = 0 exactly, but floats of 1/3 cannot show it
  V.add_term({2, 0}, {0, 1}, 1.0);
  V.add_term({0, 1}, {2, 0}, 1.0);
  CHECK(check_twist_invariance_exact(V, {{1, 3}, {2, 3}}));
  CHECK(check_twist_invariance(V, {1.0 / 3.0, 2.0 / 3.0}));

  PolyPotential bad = V;
  bad.add_term({1, 0}, {0, 0}, 0.5);
  bad.add_term({0, 0}, {1, 0}, 0.5);
  CHECK_FALSE(check_twist_invariance_exact(bad, {{1, 3}, {2, 3}}));
}

TEST_CASE("grad_squared of W = z^3/3 is |z|^4") {
  Superpotential W;
  W.n = 1;
  W.weights = {1.0 / 3.0};
  W.add_term({3}, cplx(1.0 / 3.0));
  REQUIRE(W.is_quasihomogeneous());
  const PolyPotential V = grad_squared(W);
  REQUIRE(V.monomials.size() == 1);
  const auto& [e, c] = *V.monomials.begin();
  CHECK(e.first == MultiIndex{2});
  CHECK(e.second == MultiIndex{2});
  CHECK(c.real() == Approx(1.0));
}

TEST_CASE("grad_squared of W = z1^k + z1 z2^l matches the expansion") {
  const int k = 3, l = 2;
  Superpotential W;
  W.n = 2;
  W.weights = {1.0 / k, double(k - 1) / (k * l)};
  W.add_term({k, 0}, cplx(1.0));
  W.add_term({1, l}, cplx(1.0));
  REQUIRE(W.is_quasihomogeneous());
  const PolyPotential V = grad_squared(W);
  // |k z1^{k-1} + z2^l|^2 + l^2 |z1|^2 |z2|^{2(l-1)}
  PolyPotential expect;
  expect.n = 2;
  expect.add_term({k - 1, 0}, {k - 1, 0}, double(k) * k);
  expect.add_term({k - 1, 0}, {0, l}, double(k));
  expect.add_term({0, l}, {k - 1, 0}, double(k));
  expect.add_term({0, l}, {0, l}, 1.0);
  expect.add_term({1, l - 1}, {1, l - 1}, double(l) * l);
  REQUIRE(V.monomials.size() == expect.monomials.size());
  for (const auto& [e, c] : expect.monomials) {
    auto it = V.monomials.find(e);
    REQUIRE(it != V.monomials.end());
    CHECK(std::abs(it->second - c) < 1e-12);
  }
  CHECK(check_twist_invariance(V, W.weights));
}

TEST_CASE("grad_squared of linear W is a constant") {
  Superpotential W;
  W.n = 1;
  W.weights = {1.0};
  W.add_term({1}, cplx(2.0, -1.0));
  const PolyPotential V = grad_squared(W);
  REQUIRE(V.monomials.size() == 1);
  CHECK(V.monomials.begin()->second.real() == Approx(5.0));
  CHECK(total_degree(V.monomials.begin()->first) == 0);
}

TEST_CASE("grad_squared is twist-invariant for random quasihomogeneous W") {
  CounterRng rng(99, 0);
  for (int trial = 0; trial < 40; ++trial) {
    // weights 1/p, 1/q; monomials z1^a z2^b with a/p + b/q = 1
    const int p = 2 + static_cast<int>(rng.next_u64() % 4);
    const int q = 2 + static_cast<int>(rng.next_u64() % 4);
    Superpotential W;
    W.n = 2;
    W.weights = {1.0 / p, 1.0 / q};
    for (int a = 0; a <= p; ++a) {
      // need b with a q + b p = p q
      const int num = p * q - a * q;
      if (num < 0 || num % p != 0) continue;
      const int b = num / p;
      W.add_term({a, b}, cplx(rng.next_normal(), rng.next_normal()));
    }
    REQUIRE(W.is_quasihomogeneous());
    const PolyPotential V = grad_squared(W);
    CHECK(check_twist_invariance(V, W.weights));
    CHECK(V.is_real());
  }
}

TEST_CASE("validate_potential on |z|^4") {
  PolyPotential V = quartic_potential(1, 1.0);
  V.elliptic_constants = {1.0, 1.0};
  V.ir_constants = {4.0, 4.0};
  const auto rep = validate_potential(V, {1.0});
  CHECK(rep.allowed);
  CHECK(rep.elliptic);
  CHECK(rep.ir_regular);
}

TEST_CASE("symbolic Laplacian matches finite differences") {
  PolyPotential V = quartic_potential(2, 0.7);
  V.add_term({1, 0}, {1, 0}, 0.3);
  const PolyPotential lap = V.laplacian();
  CounterRng rng(5, 0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<cplx> z{cplx(rng.next_normal(), rng.next_normal()),
                        cplx(rng.next_normal(), rng.next_normal())};
    const double sym = lap.evaluate_real(z);
    const double fd = oracles::laplacian_fd(
        [&](const std::vector<cplx>& p) { return V.evaluate_real(p); }, z);
    CHECK(sym == Approx(fd).margin(1e-4 * (1.0 + std::abs(sym))));
  }
}

TEST_CASE("unbounded potential fails the scan") {
  PolyPotential V = abs2_potential(1, -1.0);
  V.asserted_bounded_below = true;  // the scan must still catch it
  const auto rep = validate_potential(V, {1.0});
  CHECK_FALSE(rep.allowed);
  CHECK_FALSE(rep.scan_bounded_below);
  CHECK_FALSE(rep.witness.empty());
}

TEST_CASE("|z1|^2 in two components is not elliptic") {
  PolyPotential V;
  V.n = 2;
  V.add_term({1, 0}, {1, 0}, 1.0);
  V.asserted_bounded_below = true;
  V.elliptic_constants = {1.0, 1.0};
  const auto rep = validate_potential(V, {1.0, 1.0});
  CHECK(rep.allowed);
  CHECK_FALSE(rep.elliptic);   // no growth along the z2 axis
  CHECK_FALSE(rep.witness.empty());
}

TEST_CASE("construction rejects degenerate polynomials") {
  PolyPotential empty;
  empty.n = 1;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);
  PolyPotential bad;
  bad.n = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  PolyPotential v;
  v.n = 1;
  CHECK_THROWS_AS(v.add_term({1, 2}, {1, 2}, 1.0), std::invalid_argument);
}

TEST_CASE("potential JSON round trip") {
  PolyPotential V = quartic_potential(2, 0.25);
  V.add_term({1, 0}, {0, 1}, cplx(0.5, 0.25));
  V.add_term({0, 1}, {1, 0}, cplx(0.5, -0.25));
  const auto j = to_json(V);
  const PolyPotential back = potential_from_json(j);
  REQUIRE(back.monomials.size() == V.monomials.size());
  for (const auto& [e, c] : V.monomials)
    CHECK(std::abs(back.monomials.at(e) - c) < 1e-15);
  CHECK(back.elliptic_constants == V.elliptic_constants);

  Superpotential W;
  W.n = 1;
  W.weights = {0.25};
  W.add_term({4}, cplx(0.3, 0.1));
  const Superpotential wback = superpotential_from_json(to_json(W));
  CHECK(std::abs(wback.monomials.at({4}) - cplx(0.3, 0.1)) < 1e-15);
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "twistkac/fock.hpp"
#include "twistkac/gaussian_paths.hpp"
#include "twistkac/oscillator.hpp"
#include "twistkac/polynomial.hpp"
#include "twistkac/rng.hpp"

#include "oracles.hpp"

using namespace twistkac;
using Catch::Approx;

TEST_CASE("smallest representation: dimensions and diagonals") {
  const double m = 1.3;
  const auto spec = make_spec(m, 1.0, 0.0, {1.0});
  const auto rep = build_fock(spec, 1);
  REQUIRE(rep.dim == 4);
  // H0 eigenvalues {0, m, m, 2m}
  std::vector<double> h(rep.h0_diag.data(), rep.h0_diag.data() + 4);
  std::sort(h.begin(), h.end());
  CHECK(h[0] == Approx(0.0));
  CHECK(h[1] == Approx(m));
  CHECK(h[2] == Approx(m));
  CHECK(h[3] == Approx(2 * m));
  // J eigenvalues {0, omega, -omega, 0}
  std::vector<double> j(rep.j_diag.data(), rep.j_diag.data() + 4);
  std::sort(j.begin(), j.end());
  CHECK(j[0] == Approx(-1.0));
  CHECK(j[1] == Approx(0.0));
  CHECK(j[2] == Approx(0.0));
  CHECK(j[3] == Approx(1.0));
}

TEST_CASE("vacuum matrix element of z zbar is 1/(2m)") {
  const double m = 0.7;
  const auto rep = build_fock(make_spec(m, 1.0, 0.0, {1.0}), 3);
  const SpMat prod = SpMat(rep.z[0] * rep.zbar[0]);
  CHECK(prod.coeff(0, 0).real() == Approx(1.0 / (2.0 * m)));
  CHECK(prod.coeff(0, 0).imag() == Approx(0.0).margin(1e-15));
}

TEST_CASE("canonical commutators hold on the truncation interior") {
  const auto spec = make_spec(1.0, 1.0, 0.0, {1.0, 0.6});
  const int n_cut = 5;
  const auto rep = build_fock(spec, n_cut);
  for (int j = 0; j < 2; ++j) {
    const SpMat ap = rep.a_plus[static_cast<std::size_t>(j)];
    const SpMat comm = SpMat(SpMat(ap * SpMat(ap.adjoint())) - SpMat(SpMat(ap.adjoint()) * ap));
    // [a, a*] = I on states whose (j,+) register is below the cutoff
    for (long idx = 0; idx < rep.dim; ++idx) {
      const bool interior = rep.occupation(idx, 2 * j) < n_cut;
      const cplx d = comm.coeff(idx, idx);
      if (interior)
        CHECK(std::abs(d - cplx(1.0)) < 1e-14);
      else
        CHECK(std::abs(d - cplx(1.0 - n_cut - 1.0)) < 1e-12);  // -n_cut at the edge
    }
  }
}

TEST_CASE("dimension budget is enforced") {
  CHECK_THROWS_AS(build_fock(make_spec(1.0, 1.0, 0.0, {1.0}), 200, 20000),
                  std::invalid_argument);
  CHECK_NOTHROW(build_fock(make_spec(1.0, 1.0, 0.0, {1.0}), 200, 50000));
}

TEST_CASE("V = 0 assembles to the diagonal H0") {
  const auto rep = build_fock(make_spec(1.0, 1.0, 0.0, {1.0}), 6);
  const auto ham = assemble_hamiltonian(rep, nullptr);
  CHECK(ham.diagonal);
  for (long i = 0; i < rep.dim; ++i) CHECK(ham.eigenvalues(i) == Approx(rep.h0_diag(i)));
}

TEST_CASE("quadratic perturbation shifts the spectrum to the primed oscillator") {
  const double m = 1.0, eps2 = 3.0;
  const double mp = std::sqrt(m * m + eps2);
  const auto spec = make_spec(m, 1.0, 0.0, {1.0});
  const auto rep = build_fock(spec, 24);
  const auto V = abs2_potential(1, eps2);
  const auto ham = assemble_hamiltonian(rep, &V);
  REQUIRE_FALSE(ham.diagonal);
  // low spectrum: m'(n+ + n-) + (m' - m), degeneracy n+1 at level n
  std::vector<double> expect;
  for (int np = 0; np <= 4; ++np)
    for (int nm = 0; nm <= 4; ++nm) expect.push_back(mp * (np + nm) + (mp - m));
  std::sort(expect.begin(), expect.end());
  for (int i = 0; i < 10; ++i)
    CHECK(ham.eigenvalues(i) == Approx(expect[static_cast<std::size_t>(i)]).epsilon(1e-6));
}

TEST_CASE("quartic ground state energy is positive and increases with coupling") {
  const auto spec = make_spec(1.0, 1.0, 0.0, {1.0});
  const auto rep = build_fock(spec, 16);
  double prev = 0.0;
  for (double lambda : {0.1, 0.3, 0.8}) {
    const auto V = quartic_potential(1, lambda);
    const auto ham = assemble_hamiltonian(rep, &V);
    const double e0 = ham.eigenvalues(0);
    CHECK(e0 > prev);
    prev = e0;
  }
}

TEST_CASE("interior commutation with the twist unitary") {
  const auto spec = make_spec(1.0, 1.0, 1.3, {1.0});
  const auto rep = build_fock(spec, 14);
  const auto V = quartic_potential(1, 0.5);
  const auto ham = assemble_hamiltonian(rep, &V);
  CHECK(commutator_interior_norm(rep, ham, spec.theta, V.degree()) < 1e-10);

  // a non-invariant potential has a visible commutator
  PolyPotential bad;
  bad.n = 1;
  bad.add_term({2}, {0}, 0.5);
  bad.add_term({0}, {2}, 0.5);
  const auto bad_ham = assemble_hamiltonian(rep, &bad);
  CHECK(commutator_interior_norm(rep, bad_ham, spec.theta, bad.degree()) > 1e-3);
}

TEST_CASE("free twisted trace matches the closed form within the cutoff error") {
  CounterRng rng(13, 0);
  for (int trial = 0; trial < 8; ++trial) {
    const auto spec = make_spec(0.6 + rng.next_uniform_co(), 0.6 + rng.next_uniform_co(),
                                0.4 + 4.0 * rng.next_uniform_co(), {1.0});
    const int n_cut = 24;
    const auto rep = build_fock(spec, n_cut);
    const auto ham = assemble_hamiltonian(rep, nullptr);
    const cplx tr = twisted_trace(rep, ham, spec.theta, spec.beta);
    const double z = partition_function(spec);
    // truncation error law, floored at the rounding noise of the state sum
    const double bound = std::max(std::pow(gamma_modulus(spec), n_cut - 2), 1e-13);
    CHECK(std::abs(tr - z) / z < bound);
  }
}

TEST_CASE("large beta trace tends to one (unique ground state)") {
  const auto spec = make_spec(1.0, 30.0, 0.9, {1.0});
  const auto rep = build_fock(spec, 8);
  const auto ham = assemble_hamiltonian(rep, nullptr);
  CHECK(std::abs(twisted_trace(rep, ham, spec.theta, spec.beta) - cplx(1.0)) < 1e-12);
}

TEST_CASE("twist positivity of the interacting trace") {
  const auto spec = make_spec(1.0, 1.0, 1.7, {1.0});
  const auto rep = build_fock(spec, 16);
  const auto V = quartic_potential(1, 1.0);
  const auto ham = assemble_hamiltonian(rep, &V);
  const cplx tr = twisted_trace(rep, ham, spec.theta, spec.beta);
  CHECK(tr.real() > 0.0);
  CHECK(std::abs(tr.imag()) < 1e-10 * tr.real());
}

TEST_CASE("free two-point expectation reproduces the kernel") {
  const auto spec = make_spec(1.0, 1.0, 1.1, {1.0});
  const auto rep = build_fock(spec, 40, 50000);
  const auto ham = assemble_hamiltonian(rep, nullptr);
  for (auto [t, s] : {std::pair{0.3, 0.8}, {0.9, 0.2}, {0.5, 0.5}}) {
    TimeOrderedRequest req;
    req.ops = {{OpKind::Zbar, 0, t}, {OpKind::Z, 0, s}};
    const cplx osc = twisted_expectation(rep, ham, req, spec.theta, spec.beta);
    CHECK(std::abs(osc - pair_correlation(spec, t - s)) < 1e-9);
  }
}

TEST_CASE("unequal operator counts give a vanishing expectation") {
  const auto spec = make_spec(1.0, 1.0, 0.9, {1.0});
  const auto rep = build_fock(spec, 12);
  const auto V = quartic_potential(1, 0.3);
  const auto ham = assemble_hamiltonian(rep, &V);
  TimeOrderedRequest req;
  req.ops = {{OpKind::Zbar, 0, 0.2}, {OpKind::Z, 0, 0.5}, {OpKind::Z, 0, 0.8}};
  CHECK(std::abs(twisted_expectation(rep, ham, req, spec.theta, spec.beta)) < 1e-12);
}

TEST_CASE("quadratic perturbation gives the primed kernel") {
  const double m = 1.0, eps2 = 1.5;
  const auto spec = make_spec(m, 1.0, 0.8, {1.0});
  TwistSpec primed = spec;
  primed.m = std::sqrt(m * m + eps2);
  const auto rep = build_fock(spec, 28, 50000);
  const auto V = abs2_potential(1, eps2);
  const auto ham = assemble_hamiltonian(rep, &V);
  TimeOrderedRequest req;
  req.ops = {{OpKind::Zbar, 0, 0.7}, {OpKind::Z, 0, 0.2}};
  const cplx got = twisted_expectation(rep, ham, req, spec.theta, spec.beta);
  CHECK(std::abs(got - pair_correlation(primed, 0.5)) < 1e-8);
}

TEST_CASE("oracle agrees with wick pairing sums for free moments") {
  const auto spec = make_spec(1.0, 0.9, 1.4, {1.0});
  const auto rep = build_fock(spec, 40, 50000);
  const auto ham = assemble_hamiltonian(rep, nullptr);
  CounterRng rng(55, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const int r = 1 + static_cast<int>(rng.next_u64() % 3);
    TimeOrderedRequest req;
    MomentRequest wreq;
    for (int i = 0; i < r; ++i) {
      const double t = spec.beta * rng.next_uniform_co();
      const double s = spec.beta * rng.next_uniform_co();
      req.ops.push_back({OpKind::Zbar, 0, t});
      req.ops.push_back({OpKind::Z, 0, s});
      wreq.conj_times.push_back({0, t});
      wreq.plain_times.push_back({0, s});
    }
    const cplx oracle = twisted_expectation(rep, ham, req, spec.theta, spec.beta);
    const cplx wick = wick_moment(wreq, spec);
    CHECK(std::abs(oracle - wick) < 1e-8 * (1.0 + std::abs(wick)));
  }
}

TEST_CASE("coincident times apply in listed order") {
  const auto spec = make_spec(1.0, 1.0, 0.7, {1.0});
  const auto rep = build_fock(spec, 24, 50000);
  const auto ham = assemble_hamiltonian(rep, nullptr);
  TimeOrderedRequest zbar_first;
  zbar_first.ops = {{OpKind::Zbar, 0, 0.4}, {OpKind::Z, 0, 0.4}};
  TimeOrderedRequest z_first;
  z_first.ops = {{OpKind::Z, 0, 0.4}, {OpKind::Zbar, 0, 0.4}};
  const cplx a = twisted_expectation(rep, ham, zbar_first, spec.theta, spec.beta);
  const cplx b = twisted_expectation(rep, ham, z_first, spec.theta, spec.beta);
  // the tie-break is deterministic, and both orders reproduce C(0): the
  // truncated z and zbar commute away from the cutoff edge, so the order
  // only shows up at the boundary-suppressed level
  const cplx a2 = twisted_expectation(rep, ham, zbar_first, spec.theta, spec.beta);
  CHECK(a == a2);
  CHECK(std::abs(a - pair_correlation(spec, 0.0)) < 1e-8);
  CHECK(std::abs(b - pair_correlation(spec, 0.0)) < 1e-8);
  CHECK(std::abs(a - b) < 1e-7);
}

TEST_CASE("holonomy identities") {
  const auto spec = make_spec(1.0, 0.8, 1.1, {1.0});
  const auto rep = build_fock(spec, 40, 50000);
  const cplx g = gamma(spec, 0);
  // <a- a-*> = 1/(1 - gamma)
  {
    SpMat X = SpMat(rep.a_minus[0] * SpMat(rep.a_minus[0].adjoint()));
    const cplx got = equal_time_expectation(rep, X, spec.theta, spec.beta);
    CHECK(std::abs(got - 1.0 / (1.0 - g)) < 1e-10);
  }
  // cross commutators vanish: <a- a+> = 0
  {
    SpMat X = SpMat(rep.a_minus[0] * rep.a_plus[0]);
    CHECK(std::abs(equal_time_expectation(rep, X, spec.theta, spec.beta)) < 1e-13);
  }
  // residuals for all four movers over random short words
  CounterRng rng(66, 0);
  const LadderKind kinds[] = {LadderKind::AMinus, LadderKind::APlus, LadderKind::APlusDag,
                              LadderKind::AMinusDag};
  for (int trial = 0; trial < 10; ++trial) {
    HolonomyWord word;
    const int len = 1 + static_cast<int>(rng.next_u64() % 3);
    for (int i = 0; i < len; ++i)
      word.letters.emplace_back(kinds[rng.next_u64() % 4], 0);
    for (auto s_kind : kinds) {
      const cplx res = holonomy_residual(rep, spec.theta, spec.beta, s_kind, 0, word);
      CHECK(std::abs(res) < 1e-8);
    }
  }
}

TEST_CASE("holonomy at a singular factor is rejected") {
  const auto spec = make_spec(1e-12, 1e-6, 0.0, {1.0});
  auto run = [&] {
    const auto rep = build_fock(spec, 2);
    HolonomyWord word;
    word.letters = {{LadderKind::AMinusDag, 0}};
    return holonomy_residual(rep, spec.theta, spec.beta, LadderKind::AMinus, 0, word);
  };
  CHECK_THROWS_AS(run(), std::domain_error);
}

TEST_CASE("trotter product is exact for V = 0 and a constant potential") {
  const auto spec = make_spec(1.0, 0.9, 1.2, {1.0});
  const auto rep = build_fock(spec, 10);
  PolyPotential c;
  c.n = 1;
  c.add_term({0}, {0}, 0.37);
  const auto ham0 = assemble_hamiltonian(rep, nullptr);
  const cplx exact =
      std::exp(-spec.beta * 0.37) * twisted_trace(rep, ham0, spec.theta, spec.beta);
  for (int N : {1, 3, 8}) {
    const cplx tr = trotter_trace(rep, c, spec.theta, spec.beta, N);
    CHECK(std::abs(tr - exact) < 1e-10 * std::abs(exact));
  }
}

TEST_CASE("trotter error shows second-order Richardson ratios") {
  const auto spec = make_spec(1.0, 0.4, 0.9, {1.0});
  const auto rep = build_fock(spec, 20, 50000);
  const auto V = quartic_potential(1, 1.0);
  const auto ham = assemble_hamiltonian(rep, &V);
  const cplx exact = twisted_trace(rep, ham, spec.theta, spec.beta);
  std::vector<double> errors;
  for (int N : {4, 8, 16, 32})
    errors.push_back(std::abs(trotter_trace(rep, V, spec.theta, spec.beta, N) - exact));
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    CHECK(errors[i + 1] < errors[i]);
    CHECK(errors[i] / errors[i + 1] == Approx(4.0).margin(0.8));
  }
}

TEST_CASE("trotter error decreases monotonically at small beta") {
  const auto spec = make_spec(1.0, 0.3, 0.8, {1.0});
  const auto rep = build_fock(spec, 14);
  const auto V = quartic_potential(1, 0.8);
  const auto ham = assemble_hamiltonian(rep, &V);
  const cplx exact = twisted_trace(rep, ham, spec.theta, spec.beta);
  double prev = 1e9;
  for (int N = 1; N <= 64; N *= 2) {
    const double err = std::abs(trotter_trace(rep, V, spec.theta, spec.beta, N) - exact);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("converged trace reports its cutoff and convergence flag") {
  const auto spec = make_spec(0.5, 0.5, 1.7, {1.0});
  const auto conv = twisted_trace_converged(spec, nullptr, spec.theta, spec.beta, 40, 1e-8,
                                            200000);
  CHECK(conv.converged);
  CHECK(conv.n_cut > 40);
  const double z = partition_function(spec);
  CHECK(std::abs(conv.value - z) / z < 1e-8);
}

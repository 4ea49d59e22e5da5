#ifndef TWISTKAC_FOCK_HPP
#define TWISTKAC_FOCK_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#ifdef TWISTKAC_HAVE_LAPACKE
#include <lapacke.h>
#endif

#include "twistkac/common.hpp"
#include "twistkac/polynomial.hpp"
#include "twistkac/twist_spec.hpp"

namespace twistkac {

using SpMat = Eigen::SparseMatrix<cplx>;
using DenseMat = Eigen::MatrixXcd;
using RealVec = Eigen::VectorXd;

/// Dense Hermitian eigensolve; LAPACK divide-and-conquer when available.
inline void hermitian_eig(DenseMat H, RealVec& w, DenseMat& Q) {
  const auto n = H.rows();
  w.resize(n);
#ifdef TWISTKAC_HAVE_LAPACKE
  int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                            reinterpret_cast<lapack_complex_double*>(H.data()),
                            static_cast<lapack_int>(n), w.data());
  if (info == 0) {
    Q = std::move(H);
    return;
  }
#endif
  Eigen::SelfAdjointEigenSolver<DenseMat> es(H);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hermitian_eig: eigensolver failed");
  w = es.eigenvalues();
  Q = es.eigenvectors();
}

// ---------------------------------------------------------------------------
// Truncated occupation-number representation. Registers are ordered
// (0,+),(0,-),(1,+),(1,-),..., each holding 0..n_cut quanta; the basis index
// is the mixed-radix expansion over registers. All operators are sparse:
// ladder operators have one entry per column.
// ---------------------------------------------------------------------------

struct FockRep {
  TwistSpec spec;  // m and weights are used; beta/theta enter per call
  int n = 1;
  int n_cut = 0;
  long dim = 0;
  std::vector<SpMat> a_plus, a_minus;    // annihilators per component
  std::vector<SpMat> z, zbar;            // z_j = (a_+^* + a_-)/sqrt(2m)
  RealVec h0_diag;                       // m (N_+ + N_-)
  RealVec j_diag;                        // sum_j w_j (n_{j+} - n_{j-})

  long stride(int reg) const {
    long s = 1;
    for (int r = 0; r < reg; ++r) s *= n_cut + 1;
    return s;
  }
  int occupation(long index, int reg) const {
    return static_cast<int>((index / stride(reg)) % (n_cut + 1));
  }
};

/// Diagonal of U(theta) = exp(i theta J) in the occupation basis.
inline Eigen::VectorXcd twist_unitary_diagonal(const FockRep& rep, double theta) {
  Eigen::VectorXcd u(rep.dim);
  for (long i = 0; i < rep.dim; ++i) u(i) = std::exp(cplx(0.0, theta * rep.j_diag(i)));
  return u;
}

inline FockRep build_fock(const TwistSpec& spec, int n_cut, long dim_budget = 20000) {
  spec.validate();
  if (spec.m <= 0.0) throw std::domain_error("build_fock: requires m > 0");
  if (n_cut < 1) throw std::invalid_argument("build_fock: n_cut must be >= 1");
  const int n = spec.components();
  long double dimf = 1.0L;
  for (int r = 0; r < 2 * n; ++r) dimf *= n_cut + 1;
  if (dimf > static_cast<long double>(dim_budget))
    throw std::invalid_argument("build_fock: dimension budget exceeded");

  FockRep rep;
  rep.spec = spec;
  rep.n = n;
  rep.n_cut = n_cut;
  rep.dim = static_cast<long>(dimf);

  auto annihilator = [&](int reg) {
    SpMat A(rep.dim, rep.dim);
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(static_cast<std::size_t>(rep.dim));
    const long st = rep.stride(reg);
    for (long idx = 0; idx < rep.dim; ++idx) {
      const int occ = rep.occupation(idx, reg);
      if (occ > 0)
        trip.emplace_back(idx - st, idx, std::sqrt(static_cast<double>(occ)));
    }
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  };

  const double root = 1.0 / std::sqrt(2.0 * spec.m);
  for (int j = 0; j < n; ++j) {
    rep.a_plus.push_back(annihilator(2 * j));
    rep.a_minus.push_back(annihilator(2 * j + 1));
    SpMat zp = root * (SpMat(rep.a_plus.back().adjoint()) + rep.a_minus.back());
    rep.zbar.push_back(SpMat(zp.adjoint()));
    rep.z.push_back(std::move(zp));
  }

  rep.h0_diag.resize(rep.dim);
  rep.j_diag.resize(rep.dim);
  for (long idx = 0; idx < rep.dim; ++idx) {
    double tot = 0.0, charge = 0.0;
    for (int j = 0; j < n; ++j) {
      const int np = rep.occupation(idx, 2 * j);
      const int nm = rep.occupation(idx, 2 * j + 1);
      tot += np + nm;
      charge += spec.weights[static_cast<std::size_t>(j)] * (np - nm);
    }
    rep.h0_diag(idx) = spec.m * tot;
    rep.j_diag(idx) = charge;
  }
  return rep;
}

namespace detail {

/// Symmetrized product of a copies of z_j and b copies of zbar_j:
/// the equally weighted average over all interleavings, built from the
/// recursion N(a,b) = z N(a-1,b) + zbar N(a,b-1).
class SymmetrizedPowers {
 public:
  SymmetrizedPowers(const SpMat& z, const SpMat& zbar, long dim)
      : z_(z), zbar_(zbar), dim_(dim) {}

  const SpMat& unnormalized(int a, int b) {
    auto key = std::pair(a, b);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    SpMat result;
    if (a == 0 && b == 0) {
      result = SpMat(dim_, dim_);
      result.setIdentity();
    } else if (a == 0) {
      result = zbar_ * unnormalized(0, b - 1);
    } else if (b == 0) {
      result = z_ * unnormalized(a - 1, 0);
    } else {
      result = z_ * unnormalized(a - 1, b) + zbar_ * unnormalized(a, b - 1);
    }
    return cache_.emplace(key, std::move(result)).first->second;
  }

  SpMat symmetrized(int a, int b) {
    const double norm = static_cast<double>(binomial_u64(a + b, a));
    return SpMat(unnormalized(a, b) / norm);
  }

 private:
  const SpMat& z_;
  const SpMat& zbar_;
  long dim_;
  std::map<std::pair<int, int>, SpMat> cache_;
};

}  // namespace detail

/// V(z, zbar) as a sparse matrix: within each component the z / zbar factors
/// of a monomial are replaced by their symmetrized (Weyl) product, which keeps
/// the assembled matrix hermitian after truncation.
inline SpMat potential_matrix(const FockRep& rep, const PolyPotential& V) {
  if (V.n != rep.n)
    throw std::invalid_argument("potential_matrix: component count mismatch");
  std::vector<detail::SymmetrizedPowers> sym;
  sym.reserve(static_cast<std::size_t>(rep.n));
  for (int j = 0; j < rep.n; ++j)
    sym.emplace_back(rep.z[static_cast<std::size_t>(j)],
                     rep.zbar[static_cast<std::size_t>(j)], rep.dim);
  SpMat total(rep.dim, rep.dim);
  for (const auto& [e, c] : V.monomials) {
    SpMat term(rep.dim, rep.dim);
    term.setIdentity();
    for (int j = 0; j < rep.n; ++j) {
      const int a = e.first[static_cast<std::size_t>(j)];
      const int b = e.second[static_cast<std::size_t>(j)];
      if (a == 0 && b == 0) continue;
      term = term * sym[static_cast<std::size_t>(j)].symmetrized(a, b);
    }
    total += c * term;
  }
  return total;
}

struct FockHamiltonian {
  bool diagonal = true;    // V = 0 (or empty): H = H0 in the occupation basis
  SpMat h_sparse;          // H = H0 + V
  RealVec eigenvalues;
  DenseMat eigenvectors;   // empty when diagonal
  int potential_degree = 0;

  bool has_eigenvectors() const { return eigenvectors.size() > 0; }
};

inline FockHamiltonian assemble_hamiltonian(const FockRep& rep,
                                            const PolyPotential* V = nullptr) {
  FockHamiltonian ham;
  SpMat h0(rep.dim, rep.dim);
  {
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(static_cast<std::size_t>(rep.dim));
    for (long i = 0; i < rep.dim; ++i) trip.emplace_back(i, i, rep.h0_diag(i));
    h0.setFromTriplets(trip.begin(), trip.end());
  }
  if (V == nullptr || V->monomials.empty()) {
    ham.diagonal = true;
    ham.h_sparse = std::move(h0);
    ham.eigenvalues = rep.h0_diag;
    return ham;
  }
  V->require_real();
  ham.potential_degree = V->degree();
  ham.h_sparse = h0 + potential_matrix(rep, *V);
  // V may still be diagonal in the occupation basis (it is not, in general)
  bool diag = true;
  for (int k = 0; k < ham.h_sparse.outerSize() && diag; ++k)
    for (SpMat::InnerIterator it(ham.h_sparse, k); it; ++it)
      if (it.row() != it.col() && std::abs(it.value()) > 0) {
        diag = false;
        break;
      }
  ham.diagonal = diag;
  if (diag) {
    ham.eigenvalues.resize(rep.dim);
    ham.eigenvalues.setZero();
    for (int k = 0; k < ham.h_sparse.outerSize(); ++k)
      for (SpMat::InnerIterator it(ham.h_sparse, k); it; ++it)
        if (it.row() == it.col()) ham.eigenvalues(it.row()) = it.value().real();
  } else {
    DenseMat H = DenseMat(ham.h_sparse);
    const double asym = (H - H.adjoint()).norm();
    if (asym > 1e-9 * std::max(1.0, H.norm()))
      throw std::runtime_error("assemble_hamiltonian: assembled H is not hermitian");
    hermitian_eig(0.5 * (H + H.adjoint()), ham.eigenvalues, ham.eigenvectors);
  }
  return ham;
}

/// Frobenius norm of [H, U(theta)] restricted to basis states whose
/// occupations all stay margin quanta below the cutoff; vanishes for
/// twist-invariant V away from the truncation edge.
inline double commutator_interior_norm(const FockRep& rep, const FockHamiltonian& ham,
                                       double theta, int margin) {
  std::vector<bool> interior(static_cast<std::size_t>(rep.dim));
  for (long idx = 0; idx < rep.dim; ++idx) {
    bool ok = true;
    for (int r = 0; r < 2 * rep.n && ok; ++r)
      ok = rep.occupation(idx, r) <= rep.n_cut - margin;
    interior[static_cast<std::size_t>(idx)] = ok;
  }
  double acc = 0.0;
  for (int k = 0; k < ham.h_sparse.outerSize(); ++k)
    for (SpMat::InnerIterator it(ham.h_sparse, k); it; ++it) {
      if (!interior[static_cast<std::size_t>(it.row())] ||
          !interior[static_cast<std::size_t>(it.col())])
        continue;
      const cplx u_row = std::exp(cplx(0.0, theta * rep.j_diag(it.row())));
      const cplx u_col = std::exp(cplx(0.0, theta * rep.j_diag(it.col())));
      acc += std::norm(it.value() * (u_col - u_row));
    }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Twisted traces and expectations.
// ---------------------------------------------------------------------------

/// Tr(U(theta)^* e^{-beta H}). The imaginary part is a truncation diagnostic;
/// twist positivity demands it vanish against the real part.
inline cplx twisted_trace(const FockRep& rep, const FockHamiltonian& ham, double theta,
                          double beta) {
  cplx total = 0.0;
  if (ham.diagonal || !ham.has_eigenvectors()) {
    for (long i = 0; i < rep.dim; ++i)
      total += std::exp(cplx(-beta * ham.eigenvalues(i), -theta * rep.j_diag(i)));
    return total;
  }
  const DenseMat& Q = ham.eigenvectors;
  Eigen::VectorXcd u(rep.dim);
  for (long k = 0; k < rep.dim; ++k) u(k) = std::exp(cplx(0.0, -theta * rep.j_diag(k)));
  for (long i = 0; i < rep.dim; ++i) {
    cplx s = 0.0;
    for (long k = 0; k < rep.dim; ++k) s += u(k) * std::norm(Q(k, i));
    total += s * std::exp(-beta * ham.eigenvalues(i));
  }
  return total;
}

enum class OpKind { Z, Zbar };

struct TimedOperator {
  OpKind kind = OpKind::Z;
  int component = 0;
  double time = 0.0;
};

/// Time-ordered request: operators are sorted by time (stable, so listed
/// order breaks ties) and the trace is evaluated through the propagator chain
///   Tr(U^* e^{-t1 H} O_1 e^{-(t2-t1) H} ... O_k e^{-(beta-tk) H}),
/// in which every exponent decays.
struct TimeOrderedRequest {
  std::vector<TimedOperator> ops;
};

inline cplx twisted_expectation(const FockRep& rep, const FockHamiltonian& ham,
                                TimeOrderedRequest req, double theta, double beta) {
  for (const auto& op : req.ops)
    if (op.time < -1e-12 || op.time > beta + 1e-12)
      throw std::invalid_argument("twisted_expectation: time outside [0, beta]");
  std::stable_sort(req.ops.begin(), req.ops.end(),
                   [](const TimedOperator& a, const TimedOperator& b) {
                     return a.time < b.time;
                   });
  const cplx denom = twisted_trace(rep, ham, theta, beta);
  if (req.ops.empty()) return 1.0;

  const long dim = rep.dim;
  const int k = static_cast<int>(req.ops.size());
  std::vector<double> gaps;  // t1, t2-t1, ..., beta-tk
  gaps.push_back(req.ops.front().time);
  for (int i = 1; i < k; ++i) gaps.push_back(req.ops[i].time - req.ops[i - 1].time);
  gaps.push_back(beta - req.ops.back().time);

  auto op_matrix = [&](const TimedOperator& op) -> const SpMat& {
    return op.kind == OpKind::Z ? rep.z[static_cast<std::size_t>(op.component)]
                                : rep.zbar[static_cast<std::size_t>(op.component)];
  };

  if (ham.diagonal || !ham.has_eigenvectors()) {
    // sparse chain in the occupation basis
    Eigen::VectorXcd d(dim);
    auto propagator = [&](double s) {
      for (long i = 0; i < dim; ++i) d(i) = std::exp(-s * ham.eigenvalues(i));
      return d.asDiagonal();
    };
    SpMat M = op_matrix(req.ops.back()) * propagator(gaps.back());
    for (int i = k - 2; i >= 0; --i) {
      M = SpMat(propagator(gaps[static_cast<std::size_t>(i + 1)]) * M);
      M = op_matrix(req.ops[static_cast<std::size_t>(i)]) * M;
    }
    M = SpMat(propagator(gaps.front()) * M);
    cplx numer = 0.0;
    for (int c = 0; c < M.outerSize(); ++c)
      for (SpMat::InnerIterator it(M, c); it; ++it)
        if (it.row() == it.col())
          numer += std::exp(cplx(0.0, -theta * rep.j_diag(it.row()))) * it.value();
    return numer / denom;
  }

  // dense chain in the eigenbasis
  const DenseMat& Q = ham.eigenvectors;
  auto to_eigen = [&](const SpMat& O) { return DenseMat(Q.adjoint() * (O * Q)); };
  Eigen::VectorXcd d(dim);
  auto dvec = [&](double s) {
    for (long i = 0; i < dim; ++i) d(i) = std::exp(-s * ham.eigenvalues(i));
    return d;
  };
  DenseMat M = to_eigen(op_matrix(req.ops.back()));
  M = M * dvec(gaps.back()).asDiagonal();
  for (int i = k - 2; i >= 0; --i) {
    M = dvec(gaps[static_cast<std::size_t>(i + 1)]).asDiagonal() * M;
    M = to_eigen(op_matrix(req.ops[static_cast<std::size_t>(i)])) * M;
  }
  M = dvec(gaps.front()).asDiagonal() * M;
  // U^* in the eigenbasis
  Eigen::VectorXcd u(dim);
  for (long j = 0; j < dim; ++j) u(j) = std::exp(cplx(0.0, -theta * rep.j_diag(j)));
  DenseMat Ustar = Q.adjoint() * (u.asDiagonal() * Q);
  const cplx numer = (Ustar * M).trace();
  return numer / denom;
}

// ---------------------------------------------------------------------------
// Convergence ladder: a value is accepted once doubling n_cut moves it by
// less than rel_tol.
// ---------------------------------------------------------------------------

struct ConvergedValue {
  cplx value{0.0, 0.0};
  int n_cut = 0;
  bool converged = false;
  double last_rel_change = 0.0;
};

template <class EvalFn>
ConvergedValue converge_in_cutoff(const TwistSpec& spec, int start_ncut, long dim_budget,
                                  double rel_tol, EvalFn&& eval) {
  ConvergedValue out;
  int n_cut = start_ncut;
  cplx prev = eval(n_cut);
  out.value = prev;
  out.n_cut = n_cut;
  for (;;) {
    const int next = 2 * n_cut;
    long double dimf = 1.0L;
    for (int r = 0; r < 2 * spec.components(); ++r) dimf *= next + 1;
    if (dimf > static_cast<long double>(dim_budget)) break;
    const cplx cur = eval(next);
    out.last_rel_change = std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
    out.value = cur;
    out.n_cut = next;
    if (out.last_rel_change < rel_tol) {
      out.converged = true;
      break;
    }
    prev = cur;
    n_cut = next;
  }
  return out;
}

inline ConvergedValue twisted_trace_converged(const TwistSpec& spec,
                                              const PolyPotential* V, double theta,
                                              double beta, int start_ncut = 20,
                                              double rel_tol = 1e-8,
                                              long dim_budget = 20000) {
  return converge_in_cutoff(spec, start_ncut, dim_budget, rel_tol, [&](int n_cut) {
    FockRep rep = build_fock(spec, n_cut, dim_budget);
    FockHamiltonian ham = assemble_hamiltonian(rep, V);
    return twisted_trace(rep, ham, theta, beta);
  });
}

inline ConvergedValue twisted_expectation_converged(const TwistSpec& spec,
                                                    const PolyPotential* V,
                                                    const TimeOrderedRequest& req,
                                                    double theta, double beta,
                                                    int start_ncut = 12,
                                                    double rel_tol = 1e-8,
                                                    long dim_budget = 20000) {
  return converge_in_cutoff(spec, start_ncut, dim_budget, rel_tol, [&](int n_cut) {
    FockRep rep = build_fock(spec, n_cut, dim_budget);
    FockHamiltonian ham = assemble_hamiltonian(rep, V);
    return twisted_expectation(rep, ham, req, theta, beta);
  });
}

// ---------------------------------------------------------------------------
// Holonomy moves: for S with S e^{-beta H0} U^* = s e^{-beta H0} U^* S,
//   <S T> = <[S, T]> / (1 - s).
// ---------------------------------------------------------------------------

enum class LadderKind { APlus, AMinus, APlusDag, AMinusDag };

inline SpMat ladder_matrix(const FockRep& rep, LadderKind kind, int component) {
  switch (kind) {
    case LadderKind::APlus: return rep.a_plus[static_cast<std::size_t>(component)];
    case LadderKind::AMinus: return rep.a_minus[static_cast<std::size_t>(component)];
    case LadderKind::APlusDag:
      return SpMat(rep.a_plus[static_cast<std::size_t>(component)].adjoint());
    case LadderKind::AMinusDag:
      return SpMat(rep.a_minus[static_cast<std::size_t>(component)].adjoint());
  }
  throw std::logic_error("ladder_matrix: bad kind");
}

/// The commutation factor s for each ladder operator, fixed by
/// S e^{-beta H0} U^* = s e^{-beta H0} U^* S on the occupation basis:
/// lowering a register costs e^{-m beta} and a twist phase, raising gains it.
inline cplx holonomy_factor(const TwistSpec& spec, LadderKind kind, int component,
                            double theta, double beta) {
  TwistSpec at = spec;
  at.beta = beta;
  at.theta = theta;
  const cplx g = gamma(at, component);
  switch (kind) {
    case LadderKind::AMinus: return g;
    case LadderKind::APlus: return std::conj(g);
    case LadderKind::APlusDag: return 1.0 / std::conj(g);
    case LadderKind::AMinusDag: return 1.0 / g;
  }
  throw std::logic_error("holonomy_factor: bad kind");
}

/// Equal-time twisted expectation of a sparse operator under H0.
inline cplx equal_time_expectation(const FockRep& rep, const SpMat& X, double theta,
                                   double beta) {
  cplx numer = 0.0, denom = 0.0;
  for (long i = 0; i < rep.dim; ++i)
    denom += std::exp(cplx(-beta * rep.h0_diag(i), -theta * rep.j_diag(i)));
  for (int c = 0; c < X.outerSize(); ++c)
    for (SpMat::InnerIterator it(X, c); it; ++it)
      if (it.row() == it.col())
        numer += it.value() *
                 std::exp(cplx(-beta * rep.h0_diag(it.row()), -theta * rep.j_diag(it.row())));
  return numer / denom;
}

struct HolonomyWord {
  std::vector<std::pair<LadderKind, int>> letters;  // (kind, component)
};

inline SpMat word_matrix(const FockRep& rep, const HolonomyWord& word) {
  SpMat M(rep.dim, rep.dim);
  M.setIdentity();
  for (const auto& [kind, comp] : word.letters) M = SpMat(M * ladder_matrix(rep, kind, comp));
  return M;
}

/// <S T> - <[S, T]>/(1 - s); vanishes up to truncation error.
inline cplx holonomy_residual(const FockRep& rep, double theta, double beta,
                              LadderKind s_kind, int s_component,
                              const HolonomyWord& word) {
  const cplx s = holonomy_factor(rep.spec, s_kind, s_component, theta, beta);
  if (std::abs(1.0 - s) < singular_tol)
    throw std::domain_error("holonomy_residual: s = 1 (singular twist)");
  const SpMat S = ladder_matrix(rep, s_kind, s_component);
  const SpMat T = word_matrix(rep, word);
  const SpMat ST = SpMat(S * T);
  const SpMat comm = SpMat(ST - SpMat(T * S));
  return equal_time_expectation(rep, ST, theta, beta) -
         equal_time_expectation(rep, comm, theta, beta) / (1.0 - s);
}

// ---------------------------------------------------------------------------
// Trotter product: Tr(U^* (e^{-beta H0/2N} e^{-beta V/N} e^{-beta H0/2N})^N).
// ---------------------------------------------------------------------------

inline cplx trotter_trace(const FockRep& rep, const PolyPotential& V, double theta,
                          double beta, int steps) {
  if (steps < 1) throw std::invalid_argument("trotter_trace: need steps >= 1");
  const long dim = rep.dim;
  // e^{-c V} through one dense eigensolve of V
  DenseMat Vd = DenseMat(potential_matrix(rep, V));
  RealVec vw;
  DenseMat Vq;
  hermitian_eig(0.5 * (Vd + Vd.adjoint()), vw, Vq);
  const double c = beta / steps;
  Eigen::VectorXcd ev(dim), eh(dim);
  for (long i = 0; i < dim; ++i) ev(i) = std::exp(-c * vw(i));
  DenseMat expV = Vq * ev.asDiagonal() * Vq.adjoint();
  for (long i = 0; i < dim; ++i) eh(i) = std::exp(-0.5 * c * rep.h0_diag(i));
  DenseMat Tn = eh.asDiagonal() * expV * eh.asDiagonal();
  // Tn^N by binary exponentiation
  DenseMat acc = DenseMat::Identity(dim, dim);
  DenseMat base = std::move(Tn);
  int e = steps;
  while (e > 0) {
    if (e & 1) acc = acc * base;
    e >>= 1;
    if (e > 0) base = base * base;
  }
  cplx total = 0.0;
  for (long i = 0; i < dim; ++i)
    total += std::exp(cplx(0.0, -theta * rep.j_diag(i))) * acc(i, i);
  return total;
}

}  // namespace twistkac

#endif

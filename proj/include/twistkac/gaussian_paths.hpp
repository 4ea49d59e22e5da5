#ifndef TWISTKAC_GAUSSIAN_PATHS_HPP
#define TWISTKAC_GAUSSIAN_PATHS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "twistkac/common.hpp"
#include "twistkac/oscillator.hpp"
#include "twistkac/parallel.hpp"
#include "twistkac/rng.hpp"
#include "twistkac/twist_spec.hpp"

namespace twistkac {

// ---------------------------------------------------------------------------
// Gaussian measure on twisted-periodic paths, sampled in mode space:
//   omega_j(t) = sum_l zeta_l e^{i F_l t},  F_l = (2 pi l + omega_j theta)/beta,
// with independent circular complex Gaussians, E|zeta_l|^2 = 1/(beta (F_l^2+m^2)).
// The covariance then reproduces the kernel, E[conj(omega(t)) omega(s)] = C(t-s)
// restricted to the included modes, and the twist relation
// omega(t+beta) = e^{i omega_j theta} omega(t) holds exactly mode by mode.
// ---------------------------------------------------------------------------

struct PathSample {
  TwistSpec spec;
  int grid_size = 0;                       // T
  std::vector<std::vector<cplx>> modes;    // [component][mode]
  std::vector<std::vector<cplx>> values;   // [component][k] at t_k = k beta / T
};

namespace detail {

/// Evaluates psi(t) = sum_i coeffs[i] e^{i ((2 pi (l0+i) + phase)/beta) t} on the
/// grid t = (k + offset) beta / T, exactly, by folding modes mod T with their
/// offset phases and running one inverse FFT.
inline void synthesize_series(std::span<const cplx> coeffs, int l0, double phase,
                              int grid_T, double offset, Eigen::FFT<double>& fft,
                              std::vector<cplx>& bins, std::vector<cplx>& work,
                              std::span<cplx> out) {
  bins.assign(static_cast<std::size_t>(grid_T), cplx(0.0));
  const int n_modes = static_cast<int>(coeffs.size());
  for (int i = 0; i < n_modes; ++i) {
    const int l = l0 + i;
    int r = l % grid_T;
    if (r < 0) r += grid_T;
    const cplx ph = offset == 0.0 ? cplx(1.0)
                                  : std::exp(cplx(0.0, two_pi * l * offset / grid_T));
    bins[static_cast<std::size_t>(r)] += coeffs[static_cast<std::size_t>(i)] * ph;
  }
  work.resize(static_cast<std::size_t>(grid_T));
  fft.inv(work, bins);  // (1/T) sum_r bins_r e^{+2 pi i r k / T}
  for (int k = 0; k < grid_T; ++k)
    out[static_cast<std::size_t>(k)] = static_cast<double>(grid_T) *
                                       std::exp(cplx(0.0, phase * (k + offset) / grid_T)) *
                                       work[static_cast<std::size_t>(k)];
}

}  // namespace detail

class PathSampler {
 public:
  PathSampler(TwistSpec spec, int grid_size = 256, int n_modes = 0,
              std::uint64_t seed = 1)
      : spec_(std::move(spec)),
        T_(grid_size),
        n_modes_(n_modes > 0 ? n_modes : grid_size),
        seed_(seed) {
    spec_.validate();
    if (T_ < 2 || (T_ & (T_ - 1)) != 0)
      throw std::invalid_argument("PathSampler: grid size must be a power of two");
    const int n = spec_.components();
    freqs_.resize(static_cast<std::size_t>(n));
    stds_.resize(static_cast<std::size_t>(n));
    const double m2 = spec_.m * spec_.m;
    for (int j = 0; j < n; ++j) {
      freqs_[static_cast<std::size_t>(j)] = path_frequencies(spec_, j, n_modes_);
      auto& st = stds_[static_cast<std::size_t>(j)];
      st.resize(static_cast<std::size_t>(n_modes_));
      for (int l = 0; l < n_modes_; ++l) {
        const double F = freqs_[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
        const double var = 1.0 / (spec_.beta * (F * F + m2));
        if (!std::isfinite(var) || var > 1e30)
          throw std::domain_error("zero-mode variance divergent: m = 0 at a singular twist");
        st[static_cast<std::size_t>(l)] = std::sqrt(var);
      }
    }
  }

  const TwistSpec& spec() const { return spec_; }
  int grid_size() const { return T_; }
  int n_modes() const { return n_modes_; }
  std::uint64_t seed() const { return seed_; }
  double time_step() const { return spec_.beta / T_; }

  int snap_time(double t) const {
    long k = std::lround(t / spec_.beta * T_);
    k %= T_;
    if (k < 0) k += T_;
    return static_cast<int>(k);
  }

  /// Mode coefficients of sample #idx; a pure function of (seed, idx).
  void draw_modes(std::uint64_t idx, std::vector<std::vector<cplx>>& modes) const {
    const int n = spec_.components();
    modes.resize(static_cast<std::size_t>(n));
    CounterRng rng(seed_, idx);
    for (int j = 0; j < n; ++j) {
      auto& mj = modes[static_cast<std::size_t>(j)];
      mj.resize(static_cast<std::size_t>(n_modes_));
      const auto& st = stds_[static_cast<std::size_t>(j)];
      for (int l = 0; l < n_modes_; ++l)
        mj[static_cast<std::size_t>(l)] =
            st[static_cast<std::size_t>(l)] * rng.next_complex_normal();
    }
  }

  /// Values on the uniform grid t = (k + offset) beta / T. Modes beyond the
  /// grid are folded mod T with their exact offset phases, so on-grid
  /// evaluation is exact for any n_modes >= T.
  void synthesize(const std::vector<std::vector<cplx>>& modes, double offset,
                  std::vector<std::vector<cplx>>& values, Eigen::FFT<double>& fft,
                  std::vector<cplx>& bins, std::vector<cplx>& work) const {
    const int n = spec_.components();
    values.resize(static_cast<std::size_t>(n));
    const int l0 = -n_modes_ / 2;
    for (int j = 0; j < n; ++j) {
      auto& vj = values[static_cast<std::size_t>(j)];
      vj.resize(static_cast<std::size_t>(T_));
      const double wth = spec_.weights[static_cast<std::size_t>(j)] * spec_.theta;
      detail::synthesize_series(modes[static_cast<std::size_t>(j)], l0, wth, T_, offset,
                                fft, bins, work, vj);
    }
  }

  /// Exact mode-sum evaluation at an arbitrary time (wraparound checks).
  cplx value_at(const std::vector<std::vector<cplx>>& modes, int j, double t) const {
    const auto& mj = modes[static_cast<std::size_t>(j)];
    const auto& fj = freqs_[static_cast<std::size_t>(j)];
    cplx acc = 0.0;
    for (int l = 0; l < n_modes_; ++l)
      acc += mj[static_cast<std::size_t>(l)] *
             std::exp(cplx(0.0, fj[static_cast<std::size_t>(l)] * t));
    return acc;
  }

  /// C(0) mass missing from the truncated mode set, per component.
  double truncation_deficit(int j) const {
    return covariance_truncation_deficit(spec_, j, n_modes_);
  }

 private:
  TwistSpec spec_;
  int T_;
  int n_modes_;
  std::uint64_t seed_;
  std::vector<std::vector<double>> freqs_;
  std::vector<std::vector<double>> stds_;
};

inline PathSample sample_path(const TwistSpec& spec, int grid_size, int n_modes,
                              std::uint64_t seed, std::uint64_t index = 0) {
  PathSampler sampler(spec, grid_size, n_modes, seed);
  PathSample s;
  s.spec = spec;
  s.grid_size = grid_size;
  sampler.draw_modes(index, s.modes);
  Eigen::FFT<double> fft;
  std::vector<cplx> bins, work;
  sampler.synthesize(s.modes, 0.0, s.values, fft, bins, work);
  return s;
}

// ---------------------------------------------------------------------------
// Moments.
// ---------------------------------------------------------------------------

/// Time-ordered moment request: conjugated factors conj(omega_{c}(t)) and
/// plain factors omega_{c}(s). All times live in [0, beta].
struct MomentRequest {
  std::vector<std::pair<int, double>> conj_times;   // (component, time)
  std::vector<std::pair<int, double>> plain_times;  // (component, time)

  void validate(double beta) const {
    for (const auto& list : {conj_times, plain_times})
      for (const auto& [j, t] : list) {
        if (j < 0) throw std::invalid_argument("MomentRequest: negative component");
        if (t < -1e-12 || t > beta + 1e-12)
          throw std::invalid_argument("MomentRequest: time outside [0, beta]");
      }
  }
};

/// Exact Gaussian moment: delta_{r r'} sum over pairings of kernel products,
/// diagonal in the component index. Kernel may be swapped out (e.g. for the
/// truncated mode-sum kernel) via the callable argument.
template <class KernelFn>
cplx wick_moment_kernel(const MomentRequest& req, KernelFn&& kernel) {
  const int r = static_cast<int>(req.conj_times.size());
  const int rp = static_cast<int>(req.plain_times.size());
  if (r != rp) return 0.0;
  if (r == 0) return 1.0;
  if (r > 10) throw std::invalid_argument("wick_moment: more than 10 pairings");
  std::vector<int> perm(static_cast<std::size_t>(r));
  std::iota(perm.begin(), perm.end(), 0);
  // precompute the pairwise kernel values; forbid cross-component pairings
  Eigen::MatrixXcd pairs(r, r);
  for (int i = 0; i < r; ++i)
    for (int k = 0; k < r; ++k) {
      const auto& [ci, ti] = req.conj_times[static_cast<std::size_t>(i)];
      const auto& [ck, sk] = req.plain_times[static_cast<std::size_t>(k)];
      pairs(i, k) = ci == ck ? kernel(ci, ti - sk) : cplx(0.0);
    }
  cplx total = 0.0;
  do {
    cplx prod = 1.0;
    for (int i = 0; i < r; ++i) {
      prod *= pairs(i, perm[static_cast<std::size_t>(i)]);
      if (prod == cplx(0.0)) break;
    }
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

inline cplx wick_moment(const MomentRequest& req, const TwistSpec& spec) {
  req.validate(spec.beta);
  return wick_moment_kernel(
      req, [&](int j, double xi) { return pair_correlation(spec, xi, j); });
}

/// Same pairing sum against the truncated Fourier kernel: the exact moment of
/// the measure the sampler actually draws from.
inline cplx wick_moment_truncated(const MomentRequest& req, const TwistSpec& spec,
                                  int n_modes) {
  req.validate(spec.beta);
  return wick_moment_kernel(
      req, [&](int j, double xi) { return kernel_fourier_sum(spec, xi, j, n_modes); });
}

struct MonteCarloEstimate {
  cplx value{0.0, 0.0};
  double stderr_ = 0.0;
  long n_samples = 0;
};

namespace detail {

/// Chunked deterministic Monte Carlo over per-sample products of path values.
/// `eval` is called as eval(values, out_products) and may fill several
/// simultaneously estimated quantities.
template <class EvalFn>
std::vector<MeanAccumulator> run_path_mc(const PathSampler& sampler, long n_samples,
                                         int n_quantities, EvalFn&& eval,
                                         bool need_midpoint = false) {
  auto partials = map_chunks<std::vector<MeanAccumulator>>(
      static_cast<std::size_t>(n_samples),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        std::vector<MeanAccumulator> acc(static_cast<std::size_t>(n_quantities));
        Eigen::FFT<double> fft;
        std::vector<std::vector<cplx>> modes, values, mid_values;
        std::vector<cplx> bins, work, products(static_cast<std::size_t>(n_quantities));
        for (std::size_t i = begin; i < end; ++i) {
          sampler.draw_modes(i, modes);
          sampler.synthesize(modes, 0.0, values, fft, bins, work);
          if (need_midpoint) sampler.synthesize(modes, 0.5, mid_values, fft, bins, work);
          eval(values, mid_values, products);
          for (int q = 0; q < n_quantities; ++q)
            acc[static_cast<std::size_t>(q)].add(products[static_cast<std::size_t>(q)]);
        }
        return acc;
      });
  std::vector<MeanAccumulator> total(static_cast<std::size_t>(n_quantities));
  for (const auto& p : partials)
    for (int q = 0; q < n_quantities; ++q)
      total[static_cast<std::size_t>(q)].merge(p[static_cast<std::size_t>(q)]);
  return total;
}

inline cplx product_of_factors(const std::vector<std::vector<cplx>>& values,
                               std::span<const std::pair<int, int>> conj_idx,
                               std::span<const std::pair<int, int>> plain_idx) {
  cplx prod = 1.0;
  for (const auto& [j, k] : conj_idx)
    prod *= std::conj(values[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]);
  for (const auto& [j, k] : plain_idx)
    prod *= values[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  return prod;
}

}  // namespace detail

/// Monte Carlo estimate of a Gaussian moment; times are snapped to the grid.
inline MonteCarloEstimate estimate_moment_mc(const MomentRequest& req,
                                             const TwistSpec& spec, long n_samples,
                                             std::uint64_t seed, int grid_size = 256,
                                             int n_modes = 0) {
  req.validate(spec.beta);
  PathSampler sampler(spec, grid_size, n_modes, seed);
  std::vector<std::pair<int, int>> conj_idx, plain_idx;
  for (const auto& [j, t] : req.conj_times) conj_idx.emplace_back(j, sampler.snap_time(t));
  for (const auto& [j, t] : req.plain_times) plain_idx.emplace_back(j, sampler.snap_time(t));
  auto acc = detail::run_path_mc(
      sampler, n_samples, 1,
      [&](const auto& values, const auto&, std::vector<cplx>& out) {
        out[0] = detail::product_of_factors(values, conj_idx, plain_idx);
      });
  return {acc[0].mean(), acc[0].stderr_of_mean(), n_samples};
}

// ---------------------------------------------------------------------------
// Integration by parts:  <omega(s) F> = sum_{conj factors} C(t_f - s) <F \ f>,
// where F is a monomial in path values and the derivative d/d conj(omega(t))
// removes one conjugated factor at a time.
// ---------------------------------------------------------------------------

struct PathFactor {
  int component = 0;
  double time = 0.0;
  bool conjugated = false;
};

struct IbpResult {
  double mc_residual = 0.0;    // |<lhs - rhs>| estimated in one MC pass
  double mc_stderr = 0.0;
  double wick_residual = 0.0;  // same combination with exact pairing sums
};

inline MomentRequest request_from_factors(std::span<const PathFactor> factors) {
  MomentRequest req;
  for (const auto& f : factors)
    (f.conjugated ? req.conj_times : req.plain_times).emplace_back(f.component, f.time);
  return req;
}

inline IbpResult check_integration_by_parts(const TwistSpec& spec, int s_component,
                                            double s_time,
                                            std::vector<PathFactor> factors,
                                            long n_samples, std::uint64_t seed,
                                            int grid_size = 256) {
  if (factors.size() > 6)
    throw std::invalid_argument("check_integration_by_parts: degree > 6");
  PathSampler sampler(spec, grid_size, 0, seed);

  // lhs request: omega(s) * F
  std::vector<PathFactor> lhs = factors;
  lhs.push_back({s_component, s_time, false});

  // rhs: sum over conjugated factors of C(t_f - s) * (F without that factor)
  std::vector<std::pair<cplx, std::vector<PathFactor>>> rhs_terms;
  for (std::size_t f = 0; f < factors.size(); ++f) {
    if (!factors[f].conjugated || factors[f].component != s_component) continue;
    std::vector<PathFactor> sub = factors;
    sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(f));
    rhs_terms.emplace_back(pair_correlation(spec, factors[f].time - s_time, s_component),
                           std::move(sub));
  }

  IbpResult out;
  {
    cplx w = wick_moment(request_from_factors(lhs), spec);
    for (const auto& [c, sub] : rhs_terms)
      w -= c * wick_moment(request_from_factors(sub), spec);
    out.wick_residual = std::abs(w);
  }

  // one MC pass over the combined per-sample quantity
  auto snap = [&](const std::vector<PathFactor>& fs) {
    std::vector<std::pair<int, int>> conj_idx, plain_idx;
    for (const auto& f : fs) {
      auto& dst = f.conjugated ? conj_idx : plain_idx;
      dst.emplace_back(f.component, sampler.snap_time(f.time));
    }
    return std::pair(conj_idx, plain_idx);
  };
  auto [lhs_c, lhs_p] = snap(lhs);
  std::vector<std::pair<std::vector<std::pair<int, int>>, std::vector<std::pair<int, int>>>>
      rhs_idx;
  for (const auto& [c, sub] : rhs_terms) rhs_idx.push_back(snap(sub));

  auto acc = detail::run_path_mc(
      sampler, n_samples, 1,
      [&](const auto& values, const auto&, std::vector<cplx>& outp) {
        cplx y = detail::product_of_factors(values, lhs_c, lhs_p);
        for (std::size_t r = 0; r < rhs_terms.size(); ++r)
          y -= rhs_terms[r].first *
               detail::product_of_factors(values, rhs_idx[r].first, rhs_idx[r].second);
        outp[0] = y;
      });
  out.mc_residual = std::abs(acc[0].mean());
  out.mc_stderr = acc[0].stderr_of_mean();
  return out;
}

// ---------------------------------------------------------------------------
// Reflection positivity at theta = 0: Gram matrix of monomials supported in
// [beta/2, beta] against their time reflections, G_{ij} = <conj((Theta A_i)) A_j>,
// must be positive semidefinite.
// ---------------------------------------------------------------------------

inline double reflection_positivity_min_eig(const TwistSpec& spec,
                                            std::span<const std::vector<PathFactor>> family) {
  if (spec.theta != 0.0)
    throw std::invalid_argument("reflection positivity holds only at theta = 0");
  const int N = static_cast<int>(family.size());
  Eigen::MatrixXcd G(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      // conj((Theta A_i)): times reflected to beta - t, conjugation flipped
      MomentRequest req;
      for (const auto& f : family[static_cast<std::size_t>(i)]) {
        auto& dst = f.conjugated ? req.plain_times : req.conj_times;
        dst.emplace_back(f.component, spec.beta - f.time);
      }
      for (const auto& f : family[static_cast<std::size_t>(j)]) {
        auto& dst = f.conjugated ? req.conj_times : req.plain_times;
        dst.emplace_back(f.component, f.time);
      }
      G(i, j) = wick_moment(req, spec);
    }
  Eigen::MatrixXcd H = 0.5 * (G + G.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace twistkac

#endif

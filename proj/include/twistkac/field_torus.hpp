#ifndef TWISTKAC_FIELD_TORUS_HPP
#define TWISTKAC_FIELD_TORUS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "twistkac/common.hpp"
#include "twistkac/gaussian_paths.hpp"
#include "twistkac/nongaussian_mc.hpp"
#include "twistkac/oscillator.hpp"
#include "twistkac/parallel.hpp"
#include "twistkac/polynomial.hpp"
#include "twistkac/rng.hpp"
#include "twistkac/twist_spec.hpp"

namespace twistkac {

/// Momentum cutoff profile chi(k): chi(0) = 1, 0 <= chi <= 1, decaying.
struct CutoffProfile {
  enum class Kind { One, Gaussian, Sharp };
  Kind kind = Kind::One;
  double scale = 1.0;  // Gaussian: Lambda; Sharp: radius k0

  double operator()(double k_norm) const {
    switch (kind) {
      case Kind::One: return 1.0;
      case Kind::Gaussian: return std::exp(-k_norm * k_norm / (scale * scale));
      case Kind::Sharp: return k_norm <= scale ? 1.0 : 0.0;
    }
    return 1.0;
  }
  static CutoffProfile unity() { return {Kind::One, 1.0}; }
  static CutoffProfile gaussian(double lambda) { return {Kind::Gaussian, lambda}; }
  static CutoffProfile sharp(double k0) { return {Kind::Sharp, k0}; }
};

/// Free field on T^s x [0, beta] with the (s+1)-parameter twist (tau, theta).
struct FieldSpec {
  int s = 1;
  std::vector<double> periods{two_pi};  // ell_i
  int n = 1;
  std::vector<double> weights{1.0};
  double m = 1.0;
  double beta = 1.0;
  double theta = 0.0;
  std::vector<double> tau{0.0};
  double k_cut = 1.0;
  CutoffProfile chi = CutoffProfile::unity();
  bool real_field = false;

  void validate() const {
    if (s < 1) throw std::invalid_argument("FieldSpec: s must be >= 1");
    if (static_cast<int>(periods.size()) != s)
      throw std::invalid_argument("FieldSpec: periods length != s");
    for (double l : periods)
      if (!(l > 0)) throw std::invalid_argument("FieldSpec: periods must be > 0");
    if (n < 1 || static_cast<int>(weights.size()) != n)
      throw std::invalid_argument("FieldSpec: weights length != n");
    if (static_cast<int>(tau.size()) != s)
      throw std::invalid_argument("FieldSpec: tau length != s");
    if (!(m >= 0)) throw std::invalid_argument("FieldSpec: m must be >= 0");
    if (!(beta > 0)) throw std::invalid_argument("FieldSpec: beta must be > 0");
    if (!(k_cut > 0)) throw std::invalid_argument("FieldSpec: k_cut must be > 0");
    if (real_field && theta != 0.0)
      throw std::invalid_argument("FieldSpec: real fields carry no theta twist");
  }

  double volume() const {
    return std::accumulate(periods.begin(), periods.end(), 1.0, std::multiplies<>());
  }
};

using Momentum = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }

/// All dual-lattice points k_i in (2 pi / ell_i) Z with |k| <= k_cut,
/// lexicographically ordered.
inline std::vector<Momentum> momentum_lattice(const FieldSpec& spec) {
  spec.validate();
  std::vector<Momentum> out;
  std::vector<int> range_lo(static_cast<std::size_t>(spec.s));
  std::vector<int> range_hi(static_cast<std::size_t>(spec.s));
  for (int i = 0; i < spec.s; ++i) {
    const double step = two_pi / spec.periods[static_cast<std::size_t>(i)];
    const int nmax = static_cast<int>(std::floor(spec.k_cut / step + 1e-12));
    range_lo[static_cast<std::size_t>(i)] = -nmax;
    range_hi[static_cast<std::size_t>(i)] = nmax;
  }
  std::vector<int> idx(range_lo);
  for (;;) {
    Momentum k(static_cast<std::size_t>(spec.s));
    for (int i = 0; i < spec.s; ++i)
      k[static_cast<std::size_t>(i)] =
          two_pi / spec.periods[static_cast<std::size_t>(i)] * idx[static_cast<std::size_t>(i)];
    if (norm2(k) <= spec.k_cut * spec.k_cut + 1e-12) out.push_back(std::move(k));
    int pos = spec.s - 1;
    while (pos >= 0) {
      if (++idx[static_cast<std::size_t>(pos)] <= range_hi[static_cast<std::size_t>(pos)]) break;
      idx[static_cast<std::size_t>(pos)] = range_lo[static_cast<std::size_t>(pos)];
      --pos;
    }
    if (pos < 0) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline double mode_frequency(const FieldSpec& spec, std::span<const double> k) {
  return std::sqrt(norm2(k) + spec.m * spec.m);
}

/// Twist phase of the (j, k) mode: omega_j theta + k . tau.
inline double mode_phase(const FieldSpec& spec, int j, std::span<const double> k) {
  const double wth = spec.real_field ? 0.0
                                     : spec.weights[static_cast<std::size_t>(j)] * spec.theta;
  return wth + dot(k, spec.tau);
}

/// gamma_j(k) = e^{-mu(k) beta + i (k tau + omega_j theta)}.
inline cplx gamma_mode(const FieldSpec& spec, int j, std::span<const double> k) {
  return std::exp(cplx(-mode_frequency(spec, k) * spec.beta, mode_phase(spec, j, k)));
}

/// The oscillator spec equivalent to mode (j, k): mass mu(k), phase folded
/// into theta with unit weight.
inline TwistSpec mode_oscillator(const FieldSpec& spec, int j, std::span<const double> k) {
  TwistSpec osc;
  osc.m = mode_frequency(spec, k);
  osc.beta = spec.beta;
  osc.theta = mode_phase(spec, j, k);
  osc.weights = {1.0};
  return osc;
}

/// Singular twists over the truncated lattice: some (j, k) has
/// omega_j theta + k tau in 2 pi Z.
inline bool is_singular(const FieldSpec& spec, double tol = singular_tol) {
  const auto lattice = momentum_lattice(spec);
  const int ncomp = spec.real_field ? 1 : spec.n;
  for (int j = 0; j < ncomp; ++j)
    for (const auto& k : lattice)
      if (phase_is_identity(mode_phase(spec, j, k), tol)) return true;
  return false;
}

/// Throws if the k = 0 mode of the measure diverges (m = 0 at identity phase).
inline void require_nonsingular_field(const FieldSpec& spec) {
  if (spec.m > 0.0) return;
  const Momentum k0(static_cast<std::size_t>(spec.s), 0.0);
  const int ncomp = spec.real_field ? 1 : spec.n;
  for (int j = 0; j < ncomp; ++j)
    if (phase_is_identity(mode_phase(spec, j, k0)))
      throw std::domain_error("divergent partition function: massless singular zero mode");
}

// ---------------------------------------------------------------------------
// Partition function and covariance.
// ---------------------------------------------------------------------------

/// log of the truncated product: complex fields  -2 sum_{j,k} log|1-gamma_j(k)|,
/// real fields -n sum_k log|1-gamma(k)|.
inline double field_log_partition(const FieldSpec& spec) {
  spec.validate();
  require_nonsingular_field(spec);
  const auto lattice = momentum_lattice(spec);
  double logz = 0.0;
  if (spec.real_field) {
    for (const auto& k : lattice)
      logz -= spec.n * std::log(std::abs(1.0 - gamma_mode(spec, 0, k)));
  } else {
    for (int j = 0; j < spec.n; ++j)
      for (const auto& k : lattice)
        logz -= std::log(std::norm(1.0 - gamma_mode(spec, j, k)));
  }
  return logz;
}

inline double field_partition_function(const FieldSpec& spec) {
  return std::exp(field_log_partition(spec));
}

/// Fourier coefficient C_hat(k; xi)_{jj}: oscillator kernel with m -> mu(k)
/// and the twist phase shifted by k tau.
inline cplx field_covariance_coefficient(const FieldSpec& spec, int j,
                                         std::span<const double> k, double xi) {
  return pair_correlation(mode_oscillator(spec, j, k), xi, 0);
}

/// Position-space kernel (1/Vol) sum_k C_hat(k; xi) e^{i k dx} for component j.
inline cplx field_covariance_kernel(const FieldSpec& spec, int j,
                                    std::span<const double> dx, double xi) {
  const auto lattice = momentum_lattice(spec);
  cplx acc = 0.0;
  for (const auto& k : lattice)
    acc += field_covariance_coefficient(spec, j, k, xi) *
           std::exp(cplx(0.0, dot(k, dx)));
  return acc / spec.volume();
}

/// All spectrum values (E^2 + k^2 + m^2)^{-1} with E in the allowed set of
/// each (j, k), |E| <= E_max; sorted descending.
inline std::vector<double> covariance_spectrum(const FieldSpec& spec, double E_max) {
  spec.validate();
  const auto lattice = momentum_lattice(spec);
  const int ncomp = spec.real_field ? 1 : spec.n;
  std::vector<double> out;
  for (int j = 0; j < ncomp; ++j)
    for (const auto& k : lattice) {
      const double phi = mode_phase(spec, j, k);
      const double k2m2 = norm2(k) + spec.m * spec.m;
      const long lmax = static_cast<long>(std::ceil((E_max * spec.beta + std::abs(phi)) / two_pi)) + 1;
      for (long l = -lmax; l <= lmax; ++l) {
        const double E = (two_pi * l + phi) / spec.beta;
        if (std::abs(E) > E_max) continue;
        out.push_back(1.0 / (E * E + k2m2));
      }
    }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

/// sup over the truncation of 1/(E^2 + k^2): the m-independent envelope of
/// the spectrum; the largest eigenvalue is 1/(argmin(E^2+k^2) + m^2).
inline double field_spectrum_bound(const FieldSpec& spec, double E_max) {
  FieldSpec massless = spec;
  massless.m = 0.0;
  const auto values = covariance_spectrum(massless, E_max);
  if (values.empty()) throw std::runtime_error("field_spectrum_bound: empty truncation");
  return values.front();
}

// ---------------------------------------------------------------------------
// Random fields. Each (j, k) carries an independent twisted oscillator path
//   psi_{jk}(t) = sum_l zeta_l e^{i ((2 pi l + phi_jk)/beta) t},
// and the field is Phi_j(x,t) = (1/sqrt(Vol)) sum_k psi_{jk}(t) e^{-i k x}.
// Real fields keep one path per +-k pair (psi_{-k} = conj(psi_k)) and a real
// zero-mode path.
// ---------------------------------------------------------------------------

struct RandomFieldSample {
  // [component][independent-mode][mode coefficient]
  std::vector<std::vector<std::vector<cplx>>> modes;
};

class FieldSampler {
 public:
  FieldSampler(FieldSpec spec, int grid_T = 64, int n_modes = 0, std::uint64_t seed = 1)
      : spec_(std::move(spec)),
        T_(grid_T),
        n_modes_(n_modes > 0 ? n_modes : grid_T),
        seed_(seed) {
    spec_.validate();
    require_nonsingular_field(spec_);
    if (T_ < 2 || (T_ & (T_ - 1)) != 0)
      throw std::invalid_argument("FieldSampler: grid size must be a power of two");
    lattice_ = momentum_lattice(spec_);
    if (spec_.real_field) {
      // independent modes: k = 0 plus the lexicographically positive half
      const Momentum zero(static_cast<std::size_t>(spec_.s), 0.0);
      kept_.push_back(zero);
      pair_weight_.push_back(1.0);
      for (const auto& k : lattice_)
        if (k > zero) {
          kept_.push_back(k);
          pair_weight_.push_back(2.0);
        }
    } else {
      kept_ = lattice_;
      pair_weight_.assign(kept_.size(), 1.0);
    }
    const int ncomp = components();
    stds_.resize(static_cast<std::size_t>(ncomp));
    for (int j = 0; j < ncomp; ++j) {
      auto& per_mode = stds_[static_cast<std::size_t>(j)];
      per_mode.resize(kept_.size());
      for (std::size_t ki = 0; ki < kept_.size(); ++ki) {
        const double mu2 = norm2(kept_[ki]) + spec_.m * spec_.m;
        const double phi = mode_phase(spec_, j, kept_[ki]);
        const int nm = mode_count(ki);
        auto& st = per_mode[ki];
        st.resize(static_cast<std::size_t>(nm));
        const int l0 = first_index(ki);
        for (int i = 0; i < nm; ++i) {
          const double F = (two_pi * (l0 + i) + phi) / spec_.beta;
          const double var = 1.0 / (spec_.beta * (F * F + mu2));
          if (!std::isfinite(var) || var > 1e30)
            throw std::domain_error("FieldSampler: divergent mode variance");
          st[static_cast<std::size_t>(i)] = std::sqrt(var);
        }
      }
    }
  }

  const FieldSpec& spec() const { return spec_; }
  int grid_T() const { return T_; }
  int components() const { return spec_.n; }
  const std::vector<Momentum>& lattice() const { return lattice_; }
  const std::vector<Momentum>& independent_modes() const { return kept_; }

  bool is_zero_mode(std::size_t ki) const {
    return norm2(kept_[ki]) == 0.0;
  }

  /// Real fields use a symmetric (odd) window for the self-conjugate zero
  /// mode; everything else takes the full n_modes window.
  int mode_count(std::size_t ki) const {
    if (spec_.real_field && is_zero_mode(ki)) return n_modes_ - 1 + (n_modes_ & 1);
    return n_modes_;
  }
  int first_index(std::size_t ki) const { return -mode_count(ki) / 2; }

  void draw(std::uint64_t idx, RandomFieldSample& sample) const {
    const int ncomp = components();
    sample.modes.resize(static_cast<std::size_t>(ncomp));
    CounterRng rng(seed_, idx);
    for (int j = 0; j < ncomp; ++j) {
      auto& per_mode = sample.modes[static_cast<std::size_t>(j)];
      per_mode.resize(kept_.size());
      for (std::size_t ki = 0; ki < kept_.size(); ++ki) {
        const auto& st = stds_[static_cast<std::size_t>(j)][ki];
        auto& coeffs = per_mode[ki];
        coeffs.resize(st.size());
        if (spec_.real_field && is_zero_mode(ki)) {
          // real path: zeta_{-l} = conj(zeta_l), zeta_0 real
          const int nm = mode_count(ki);
          const int mid = -first_index(ki);
          coeffs[static_cast<std::size_t>(mid)] = st[static_cast<std::size_t>(mid)] * rng.next_normal();
          for (int l = 1; l <= nm / 2; ++l) {
            const cplx g = rng.next_complex_normal();
            coeffs[static_cast<std::size_t>(mid + l)] = st[static_cast<std::size_t>(mid + l)] * g;
            coeffs[static_cast<std::size_t>(mid - l)] =
                st[static_cast<std::size_t>(mid - l)] * std::conj(g);
          }
        } else {
          for (std::size_t i = 0; i < st.size(); ++i)
            coeffs[i] = st[i] * rng.next_complex_normal();
        }
      }
    }
  }

  /// Applies chi to every nonzero momentum mode; the zero mode is untouched.
  RandomFieldSample apply_cutoff(const RandomFieldSample& sample,
                                 const CutoffProfile& chi) const {
    RandomFieldSample out = sample;
    for (auto& per_comp : out.modes)
      for (std::size_t ki = 0; ki < kept_.size(); ++ki) {
        const double kn = std::sqrt(norm2(kept_[ki]));
        if (kn == 0.0) continue;
        const double w = chi(kn);
        for (auto& c : per_comp[ki]) c *= w;
      }
    return out;
  }

  /// psi_{jk}(t) on the time grid t = (kt + offset_t) beta / T.
  void mode_path(const RandomFieldSample& sample, int j, std::size_t ki,
                 double offset_t, Eigen::FFT<double>& fft, std::vector<cplx>& bins,
                 std::vector<cplx>& work, std::span<cplx> out) const {
    const double phi = mode_phase(spec_, j, kept_[ki]);
    detail::synthesize_series(sample.modes[static_cast<std::size_t>(j)][ki],
                              first_index(ki), phi, T_, offset_t, fft, bins, work, out);
  }

  /// Field values on the (x, t) product grid: out[j][g][kt] with
  /// x_g = (g + offset_x) ell / Nx per dimension (row-major over dimensions).
  void evaluate_grid(const RandomFieldSample& sample, int points_per_dim,
                     double offset_x, double offset_t, Eigen::FFT<double>& fft,
                     std::vector<cplx>& bins, std::vector<cplx>& work,
                     std::vector<std::vector<std::vector<cplx>>>& out) const {
    const int ncomp = components();
    const long nx = spatial_points(points_per_dim);
    out.resize(static_cast<std::size_t>(ncomp));
    std::vector<cplx> path(static_cast<std::size_t>(T_));
    const double inv_sqrt_vol = 1.0 / std::sqrt(spec_.volume());
    for (int j = 0; j < ncomp; ++j) {
      auto& grid = out[static_cast<std::size_t>(j)];
      grid.assign(static_cast<std::size_t>(nx),
                  std::vector<cplx>(static_cast<std::size_t>(T_), cplx(0.0)));
      for (std::size_t ki = 0; ki < kept_.size(); ++ki) {
        mode_path(sample, j, ki, offset_t, fft, bins, work, path);
        for (long g = 0; g < nx; ++g) {
          const cplx ph = std::exp(cplx(0.0, -dot(kept_[ki], grid_point(g, points_per_dim, offset_x))));
          auto& row = grid[static_cast<std::size_t>(g)];
          if (spec_.real_field && pair_weight_[ki] == 2.0) {
            for (int kt = 0; kt < T_; ++kt)
              row[static_cast<std::size_t>(kt)] +=
                  2.0 * (path[static_cast<std::size_t>(kt)] * ph).real();
          } else if (spec_.real_field) {
            for (int kt = 0; kt < T_; ++kt)
              row[static_cast<std::size_t>(kt)] +=
                  (path[static_cast<std::size_t>(kt)] * ph).real();
          } else {
            for (int kt = 0; kt < T_; ++kt)
              row[static_cast<std::size_t>(kt)] += path[static_cast<std::size_t>(kt)] * ph;
          }
        }
      }
      for (auto& row : grid)
        for (auto& v : row) v *= inv_sqrt_vol;
    }
  }

  /// Exact mode-sum evaluation at arbitrary (x, t) (wraparound checks).
  cplx value_at(const RandomFieldSample& sample, int j, std::span<const double> x,
                double t) const {
    cplx acc = 0.0;
    for (std::size_t ki = 0; ki < kept_.size(); ++ki) {
      const double phi = mode_phase(spec_, j, kept_[ki]);
      const auto& coeffs = sample.modes[static_cast<std::size_t>(j)][ki];
      const int l0 = first_index(ki);
      cplx psi = 0.0;
      for (std::size_t i = 0; i < coeffs.size(); ++i)
        psi += coeffs[i] *
               std::exp(cplx(0.0, (two_pi * (l0 + static_cast<int>(i)) + phi) / spec_.beta * t));
      const cplx ph = std::exp(cplx(0.0, -dot(kept_[ki], x)));
      if (spec_.real_field && pair_weight_[ki] == 2.0)
        acc += 2.0 * (psi * ph).real();
      else if (spec_.real_field)
        acc += (psi * ph).real();
      else
        acc += psi * ph;
    }
    return acc / std::sqrt(spec_.volume());
  }

  long spatial_points(int points_per_dim) const {
    long nx = 1;
    for (int i = 0; i < spec_.s; ++i) nx *= points_per_dim;
    return nx;
  }

  Momentum grid_point(long flat, int points_per_dim, double offset_x) const {
    Momentum x(static_cast<std::size_t>(spec_.s));
    for (int i = spec_.s - 1; i >= 0; --i) {
      const long g = flat % points_per_dim;
      flat /= points_per_dim;
      x[static_cast<std::size_t>(i)] =
          (g + offset_x) * spec_.periods[static_cast<std::size_t>(i)] / points_per_dim;
    }
    return x;
  }

 private:
  FieldSpec spec_;
  int T_;
  int n_modes_;
  std::uint64_t seed_;
  std::vector<Momentum> lattice_;
  std::vector<Momentum> kept_;          // independent modes
  std::vector<double> pair_weight_;     // 2 for paired +-k in the real case
  std::vector<std::vector<std::vector<double>>> stds_;  // [j][ki][l]
};

inline RandomFieldSample sample_random_field(const FieldSpec& spec, int grid_T,
                                             std::uint64_t seed, std::uint64_t index = 0) {
  FieldSampler sampler(spec, grid_T, 0, seed);
  RandomFieldSample s;
  sampler.draw(index, s);
  return s;
}

// ---------------------------------------------------------------------------
// Regularized non-Gaussian reweighting on the cylinder:
//   Z^V = E[ exp(-int_C V(Phi_chi, conj(Phi_chi)) dy ds) ],
// midpoint rule in both space and time.
// ---------------------------------------------------------------------------

inline ReweightedEstimate field_relative_partition_mc(const FieldSpec& spec,
                                                      const PolyPotential& V,
                                                      int grid_T, int points_per_dim,
                                                      long n_samples,
                                                      std::uint64_t seed) {
  if (V.n != spec.n)
    throw std::invalid_argument("field_relative_partition_mc: component mismatch");
  {
    const auto rep = validate_potential(V, spec.weights);
    if (!rep.allowed)
      throw std::invalid_argument("potential not allowed: " + rep.detail);
  }
  FieldSampler sampler(spec, grid_T, 0, seed);
  PotentialEvaluator eval(V);
  const long nx = sampler.spatial_points(points_per_dim);
  const double cell = spec.volume() / static_cast<double>(nx) * spec.beta / grid_T;

  struct Partial {
    double w_sum = 0.0, w2_sum = 0.0;
  };
  auto partials = map_chunks<Partial>(
      static_cast<std::size_t>(n_samples),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        Partial p;
        Eigen::FFT<double> fft;
        RandomFieldSample sample, cut;
        std::vector<cplx> bins, work, point(static_cast<std::size_t>(spec.n));
        std::vector<std::vector<std::vector<cplx>>> grid;
        for (std::size_t i = begin; i < end; ++i) {
          sampler.draw(i, sample);
          cut = sampler.apply_cutoff(sample, spec.chi);
          sampler.evaluate_grid(cut, points_per_dim, 0.5, 0.5, fft, bins, work, grid);
          double q = 0.0;
          for (long g = 0; g < nx; ++g)
            for (int kt = 0; kt < grid_T; ++kt) {
              for (int j = 0; j < spec.n; ++j)
                point[static_cast<std::size_t>(j)] =
                    grid[static_cast<std::size_t>(j)][static_cast<std::size_t>(g)]
                        [static_cast<std::size_t>(kt)];
              q += eval(point);
            }
          const double w = std::exp(-q * cell);
          p.w_sum += w;
          p.w2_sum += w * w;
        }
        return p;
      });
  double w_sum = 0.0, w2_sum = 0.0;
  for (const auto& p : partials) {
    w_sum += p.w_sum;
    w2_sum += p.w2_sum;
  }
  const double mean = w_sum / n_samples;
  const double var = std::max(0.0, (w2_sum - w_sum * w_sum / n_samples) / (n_samples - 1));
  ReweightedEstimate out;
  out.value = mean;
  out.stderr_ = std::sqrt(var / n_samples);
  out.n_samples = n_samples;
  out.grid_T = grid_T;
  out.seed = seed;
  out.ess = w2_sum > 0.0 ? w_sum * w_sum / w2_sum : static_cast<double>(n_samples);
  out.flagged = out.ess < 100.0;
  return out;
}

// ---------------------------------------------------------------------------
// Zero-mass sweep for fields: spectrum maxima and kernel values at m -> 0.
// ---------------------------------------------------------------------------

struct FieldZeroMassRow {
  double m = 0.0;
  double spectrum_max = 0.0;
  cplx kernel_origin{0.0, 0.0};  // C(0, 0)
};

struct FieldZeroMassSweep {
  std::vector<FieldZeroMassRow> rows;
  double envelope = 0.0;  // sup 1/(E^2+k^2) over the truncation
  std::vector<double> kernel_cauchy;
};

inline FieldZeroMassSweep zero_mass_field_sweep(const FieldSpec& base,
                                                std::span<const double> masses,
                                                double E_max) {
  FieldSpec probe = base;
  probe.m = 0.0;
  if (is_singular(probe))
    throw std::domain_error("zero_mass_field_sweep: singular (tau, theta)");
  FieldZeroMassSweep out;
  out.envelope = field_spectrum_bound(base, E_max);
  const std::vector<double> origin(static_cast<std::size_t>(base.s), 0.0);
  for (double m : masses) {
    FieldSpec spec = base;
    spec.m = m;
    FieldZeroMassRow row;
    row.m = m;
    row.spectrum_max = covariance_spectrum(spec, E_max).front();
    row.kernel_origin = field_covariance_kernel(spec, 0, origin, 0.0);
    out.rows.push_back(row);
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    out.kernel_cauchy.push_back(
        std::abs(out.rows[i].kernel_origin - out.rows[i - 1].kernel_origin));
  return out;
}

}  // namespace twistkac

#endif

#ifndef TWISTKAC_NONGAUSSIAN_MC_HPP
#define TWISTKAC_NONGAUSSIAN_MC_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "twistkac/common.hpp"
#include "twistkac/gaussian_paths.hpp"
#include "twistkac/oscillator.hpp"
#include "twistkac/parallel.hpp"
#include "twistkac/polynomial.hpp"
#include "twistkac/twist_spec.hpp"

namespace twistkac {

/// Flattened monomial list for fast pointwise evaluation of V along a path.
class PotentialEvaluator {
 public:
  explicit PotentialEvaluator(const PolyPotential& V) : n_(V.n) {
    for (const auto& [e, c] : V.monomials) {
      Term t;
      t.coeff = c;
      t.a = e.first;
      t.b = e.second;
      terms_.push_back(std::move(t));
    }
  }

  int components() const { return n_; }

  double operator()(std::span<const cplx> z) const {
    cplx acc = 0.0;
    for (const auto& t : terms_) {
      cplx term = t.coeff;
      for (int j = 0; j < n_; ++j) {
        const cplx zj = z[static_cast<std::size_t>(j)];
        for (int p = 0; p < t.a[static_cast<std::size_t>(j)]; ++p) term *= zj;
        const cplx zjc = std::conj(zj);
        for (int p = 0; p < t.b[static_cast<std::size_t>(j)]; ++p) term *= zjc;
      }
      acc += term;
    }
    return acc.real();
  }

 private:
  struct Term {
    cplx coeff;
    MultiIndex a, b;
  };
  int n_;
  std::vector<Term> terms_;
};

/// Midpoint-rule action Q[omega] = (beta/T) sum_k V(omega((k+1/2) beta/T)).
inline double path_action(const PotentialEvaluator& V,
                          const std::vector<std::vector<cplx>>& mid_values,
                          double beta, int grid_T, std::vector<cplx>& point) {
  const int n = static_cast<int>(mid_values.size());
  point.resize(static_cast<std::size_t>(n));
  double q = 0.0;
  for (int k = 0; k < grid_T; ++k) {
    for (int j = 0; j < n; ++j)
      point[static_cast<std::size_t>(j)] =
          mid_values[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    q += V(point);
  }
  return q * beta / grid_T;
}

struct ReweightedEstimate {
  cplx value{0.0, 0.0};
  double stderr_ = 0.0;
  long n_samples = 0;
  int grid_T = 0;
  std::string rule = "midpoint";
  std::uint64_t seed = 0;
  double ess = 0.0;        // effective sample size of the weights
  bool flagged = false;    // ess below threshold
  double tail_bound = 0.0; // covariance truncation deficit at equal time
};

inline void require_allowed(const PolyPotential& V, const TwistSpec& spec) {
  const auto rep = validate_potential(V, spec.weights);
  if (!rep.allowed)
    throw std::invalid_argument("potential not allowed: " + rep.detail);
}

/// Z^V = E[exp(-int_0^beta V(omega, conj(omega)) ds)] under the free measure.
inline ReweightedEstimate relative_partition_mc(const TwistSpec& spec,
                                                const PolyPotential& V, int grid_T,
                                                long n_samples, std::uint64_t seed,
                                                int n_modes = 0) {
  require_allowed(V, spec);
  require_nonsingular_measure(spec);
  PathSampler sampler(spec, grid_T, n_modes, seed);
  PotentialEvaluator eval(V);

  struct Partial {
    double w_sum = 0.0, w2_sum = 0.0;
    long count = 0;
  };
  auto partials = map_chunks<Partial>(
      static_cast<std::size_t>(n_samples),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        Partial p;
        Eigen::FFT<double> fft;
        std::vector<std::vector<cplx>> modes, mid;
        std::vector<cplx> bins, work, point;
        for (std::size_t i = begin; i < end; ++i) {
          sampler.draw_modes(i, modes);
          sampler.synthesize(modes, 0.5, mid, fft, bins, work);
          const double q = path_action(eval, mid, spec.beta, grid_T, point);
          const double w = std::exp(-q);
          p.w_sum += w;
          p.w2_sum += w * w;
          ++p.count;
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
  out.tail_bound = sampler.truncation_deficit(0);
  return out;
}

/// <X>^V = E[X e^{-Q}]/E[e^{-Q}], with the delta-method standard error for
/// the correlated ratio.
inline ReweightedEstimate gibbs_expectation_mc(const TwistSpec& spec,
                                               const PolyPotential& V,
                                               const MomentRequest& req, int grid_T,
                                               long n_samples, std::uint64_t seed,
                                               int n_modes = 0) {
  require_allowed(V, spec);
  require_nonsingular_measure(spec);
  req.validate(spec.beta);
  PathSampler sampler(spec, grid_T, n_modes, seed);
  PotentialEvaluator eval(V);

  std::vector<std::pair<int, int>> conj_idx, plain_idx;
  for (const auto& [j, t] : req.conj_times) conj_idx.emplace_back(j, sampler.snap_time(t));
  for (const auto& [j, t] : req.plain_times) plain_idx.emplace_back(j, sampler.snap_time(t));

  struct Partial {
    double w_sum = 0.0, w2_sum = 0.0;
    cplx xw_sum{0.0, 0.0};
    double xw2_sum = 0.0;       // sum |x w|^2
    cplx xww_sum{0.0, 0.0};     // sum (x w) w  (w real)
    long count = 0;
  };
  auto partials = map_chunks<Partial>(
      static_cast<std::size_t>(n_samples),
      [&](std::size_t, std::size_t begin, std::size_t end) {
        Partial p;
        Eigen::FFT<double> fft;
        std::vector<std::vector<cplx>> modes, values, mid;
        std::vector<cplx> bins, work, point;
        for (std::size_t i = begin; i < end; ++i) {
          sampler.draw_modes(i, modes);
          sampler.synthesize(modes, 0.0, values, fft, bins, work);
          sampler.synthesize(modes, 0.5, mid, fft, bins, work);
          const double q = path_action(eval, mid, spec.beta, grid_T, point);
          const double w = std::exp(-q);
          const cplx x = detail::product_of_factors(values, conj_idx, plain_idx);
          p.w_sum += w;
          p.w2_sum += w * w;
          p.xw_sum += x * w;
          p.xw2_sum += std::norm(x * w);
          p.xww_sum += x * w * w;
          ++p.count;
        }
        return p;
      });
  Partial tot;
  for (const auto& p : partials) {
    tot.w_sum += p.w_sum;
    tot.w2_sum += p.w2_sum;
    tot.xw_sum += p.xw_sum;
    tot.xw2_sum += p.xw2_sum;
    tot.xww_sum += p.xww_sum;
    tot.count += p.count;
  }
  const double N = static_cast<double>(n_samples);
  const double B = tot.w_sum / N;                  // mean weight
  const cplx A = tot.xw_sum / N;                   // mean x*w
  const cplx R = A / B;
  const double var_A = std::max(0.0, (tot.xw2_sum - std::norm(tot.xw_sum) / N) / (N - 1));
  const double var_B = std::max(0.0, (tot.w2_sum - tot.w_sum * tot.w_sum / N) / (N - 1));
  const cplx cov_AB = (tot.xww_sum - tot.xw_sum * tot.w_sum / N) / (N - 1);
  // Var(A/B) ~ [Var A + |R|^2 Var B - 2 Re(conj(R/B^2)...)] / B^2, first order
  const double var_ratio =
      std::max(0.0, (var_A + std::norm(R) * var_B - 2.0 * (std::conj(R) * cov_AB).real()) /
                        (B * B));

  ReweightedEstimate out;
  out.value = R;
  out.stderr_ = std::sqrt(var_ratio / N);
  out.n_samples = n_samples;
  out.grid_T = grid_T;
  out.seed = seed;
  out.ess = tot.w2_sum > 0.0 ? tot.w_sum * tot.w_sum / tot.w2_sum : N;
  out.flagged = out.ess < 100.0;
  out.tail_bound = sampler.truncation_deficit(0);
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps.
// ---------------------------------------------------------------------------

struct SweepRow {
  double m = 0.0;
  double lambda = 0.0;
  double beta = 0.0;
  double theta = 0.0;
  cplx value{0.0, 0.0};
  double stderr_ = 0.0;
  int grid_T = 0;
  long n_samples = 0;
  std::uint64_t seed = 0;
  std::string label;
};

struct CanonicalBoundSweep {
  std::vector<SweepRow> rows;   // product Z^{lambda^2 V} * z_gamma per lambda
  double fitted_constant = 0.0; // C with product <= C (beta (m+lambda))^{-2n}
  bool bound_holds = false;
};

/// Tr-estimate z^{lambda^2 V} * z_gamma over a lambda grid; dominated by
/// C (beta (m + lambda))^{-2n} for the single fitted constant C.
inline CanonicalBoundSweep canonical_bound_sweep(const TwistSpec& spec,
                                                 const PolyPotential& V,
                                                 std::span<const double> lambdas,
                                                 int grid_T, long n_samples,
                                                 std::uint64_t seed) {
  if (!V.elliptic_constants)
    throw std::invalid_argument("canonical_bound_sweep: elliptic constants required");
  CanonicalBoundSweep out;
  const double z_free = partition_function(spec);
  const int n2 = 2 * spec.components();
  double C = 0.0;
  for (double la : lambdas) {
    if (!(la > 0.0 && la <= 1.0))
      throw std::invalid_argument("canonical_bound_sweep: lambda grid must lie in (0,1]");
    auto est = relative_partition_mc(spec, V.scaled(la * la), grid_T, n_samples, seed);
    SweepRow row;
    row.m = spec.m;
    row.lambda = la;
    row.beta = spec.beta;
    row.theta = spec.theta;
    row.value = est.value * z_free;
    row.stderr_ = est.stderr_ * z_free;
    row.grid_T = grid_T;
    row.n_samples = n_samples;
    row.seed = seed;
    row.label = "Z_product";
    out.rows.push_back(row);
    const double envelope = std::pow(spec.beta * (spec.m + la), -n2);
    C = std::max(C, (row.value.real() + 3.0 * row.stderr_) / envelope);
  }
  out.fitted_constant = C;
  out.bound_holds = true;
  for (const auto& row : out.rows) {
    const double envelope =
        C * std::pow(spec.beta * (spec.m + row.lambda), -n2);
    if (row.value.real() - 3.0 * row.stderr_ > envelope) out.bound_holds = false;
  }
  return out;
}

struct ZeroMassSweep {
  std::vector<SweepRow> z_rows;        // Z^V per m
  std::vector<SweepRow> moment_rows;   // <|omega(0)|^2>^V per m
  std::vector<double> z_cauchy;        // |Z(m_{i+1}) - Z(m_i)|
};

/// Estimates at decreasing masses with common random numbers (the mode set
/// and the seed are shared, so only the per-mode standard deviations move).
inline ZeroMassSweep zero_mass_sweep(const TwistSpec& base, const PolyPotential& V,
                                     std::span<const double> masses, int grid_T,
                                     long n_samples, std::uint64_t seed) {
  TwistSpec probe = base;
  probe.m = 0.0;
  if (is_singular(probe))
    throw std::domain_error(
        "zero_mass_sweep: singular twist; the zero-mass limit diverges");
  ZeroMassSweep out;
  MomentRequest req;
  req.conj_times.emplace_back(0, 0.0);
  req.plain_times.emplace_back(0, 0.0);
  for (double m : masses) {
    TwistSpec spec = base;
    spec.m = m;
    auto z_est = relative_partition_mc(spec, V, grid_T, n_samples, seed);
    auto mom = gibbs_expectation_mc(spec, V, req, grid_T, n_samples, seed);
    SweepRow zr;
    zr.m = m;
    zr.beta = spec.beta;
    zr.theta = spec.theta;
    zr.value = z_est.value;
    zr.stderr_ = z_est.stderr_;
    zr.grid_T = grid_T;
    zr.n_samples = n_samples;
    zr.seed = seed;
    zr.label = "Z_V";
    out.z_rows.push_back(zr);
    zr.value = mom.value;
    zr.stderr_ = mom.stderr_;
    zr.label = "abs2_moment";
    out.moment_rows.push_back(zr);
  }
  for (std::size_t i = 1; i < out.z_rows.size(); ++i)
    out.z_cauchy.push_back(std::abs(out.z_rows[i].value - out.z_rows[i - 1].value));
  return out;
}

}  // namespace twistkac

#endif

// Batch front-end: experiment configuration, subcommand dispatch, and
// JSON/CSV result emission for the twisted Gibbs laboratory.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "twistkac/common.hpp"
#include "twistkac/field_torus.hpp"
#include "twistkac/fock.hpp"
#include "twistkac/gaussian_paths.hpp"
#include "twistkac/io_util.hpp"
#include "twistkac/nongaussian_mc.hpp"
#include "twistkac/normal_order.hpp"
#include "twistkac/oscillator.hpp"
#include "twistkac/polynomial.hpp"
#include "twistkac/twist_spec.hpp"

namespace tk = twistkac;
using nlohmann::json;

namespace {

constexpr const char* kSchema = "twistkac/1";

// --------------------------------------------------------------------------
// Option registry: every option is also fillable from a JSON config file;
// command-line flags override config values.
// --------------------------------------------------------------------------

class OptionRegistry {
 public:
  explicit OptionRegistry(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
    CLI::Option* opt = app_->add_option("--" + name, var, desc);
    entries_[name] = Entry{
        opt,
        [&var](const json& j) { var = j.get<T>(); },
        [&var]() { return to_value(var); },
    };
    return opt;
  }

  CLI::Option* add_flag(const std::string& name, bool& var, const std::string& desc) {
    CLI::Option* opt = app_->add_flag("--" + name, var, desc);
    entries_[name] = Entry{
        opt,
        [&var](const json& j) { var = j.get<bool>(); },
        [&var]() { return tk::JsonWriter::Value(var); },
    };
    return opt;
  }

  /// Applies config values for options not given on the command line.
  void apply_config(const json& cfg) {
    for (const auto& [key, value] : cfg.items()) {
      auto it = entries_.find(key);
      if (it == entries_.end())
        throw CLI::ValidationError("config", "unknown config key: " + key);
      if (it->second.opt->count() == 0) it->second.from_json(value);
    }
  }

  /// Resolved configuration echoed into every output.
  tk::JsonWriter::Object resolved() const {
    tk::JsonWriter::Object obj;
    for (const auto& [key, entry] : entries_) obj.emplace_back(key, entry.to_json());
    return obj;
  }

 private:
  template <class T>
  static tk::JsonWriter::Value to_value(const T& v) {
    if constexpr (std::is_same_v<T, std::vector<double>>) {
      tk::JsonWriter::Array arr;
      for (double x : v) arr.emplace_back(x);
      return arr;
    } else {
      return tk::JsonWriter::Value(v);
    }
  }

  struct Entry {
    CLI::Option* opt;
    std::function<void(const json&)> from_json;
    std::function<tk::JsonWriter::Value()> to_json;
  };
  CLI::App* app_;
  std::map<std::string, Entry> entries_;
};

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + out_path);
    f << text;
  }
}

std::string result_json(const OptionRegistry& reg, tk::JsonWriter::Object result) {
  tk::JsonWriter::Object doc;
  doc.emplace_back("schema", kSchema);
  doc.emplace_back("config", reg.resolved());
  doc.emplace_back("result", std::move(result));
  return tk::JsonWriter::dump(doc, 2);
}

std::string csv_header_comment(const OptionRegistry& reg) {
  tk::JsonWriter::Object doc;
  doc.emplace_back("schema", kSchema);
  doc.emplace_back("config", reg.resolved());
  return "# " + tk::JsonWriter::dump(doc, 0);
}

// "j:t,j:t" -> list of (component, time)
std::vector<std::pair<int, double>> parse_component_times(const std::string& text) {
  std::vector<std::pair<int, double>> out;
  if (text.empty()) return out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("times", "expected j:t, got " + tok);
    out.emplace_back(std::stoi(tok.substr(0, colon)), std::stod(tok.substr(colon + 1)));
  }
  return out;
}

// "z:0:0.25,zbar:0:0.5" -> time-ordered request
tk::TimeOrderedRequest parse_operator_times(const std::string& text) {
  tk::TimeOrderedRequest req;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::stringstream ts(tok);
    std::string kind, comp, time;
    if (!std::getline(ts, kind, ':') || !std::getline(ts, comp, ':') ||
        !std::getline(ts, time, ':'))
      throw CLI::ValidationError("times", "expected kind:component:time, got " + tok);
    tk::TimedOperator op;
    if (kind == "z")
      op.kind = tk::OpKind::Z;
    else if (kind == "zbar")
      op.kind = tk::OpKind::Zbar;
    else
      throw CLI::ValidationError("times", "operator must be z or zbar");
    op.component = std::stoi(comp);
    op.time = std::stod(time);
    req.ops.push_back(op);
  }
  return req;
}

tk::LadderKind parse_ladder(const std::string& s) {
  if (s == "am") return tk::LadderKind::AMinus;
  if (s == "ap") return tk::LadderKind::APlus;
  if (s == "apd") return tk::LadderKind::APlusDag;
  if (s == "amd") return tk::LadderKind::AMinusDag;
  throw CLI::ValidationError("ladder", "expected one of am, ap, apd, amd");
}

/// "--potential" accepts a JSON file path or a builtin spec
/// ("quartic", "abs2"), scaled by --lambda.
tk::PolyPotential load_potential(const std::string& text, int n, double lambda) {
  if (text == "quartic") return tk::quartic_potential(n, lambda);
  if (text == "abs2") return tk::abs2_potential(n, lambda);
  std::ifstream f(text);
  if (!f) throw CLI::ValidationError("potential", "cannot open " + text);
  json j;
  f >> j;
  tk::PolyPotential V = tk::potential_from_json(j);
  return lambda == 1.0 ? V : V.scaled(lambda);
}

struct CommonSpec {
  double m = 1.0, beta = 1.0, theta = 0.0;
  std::vector<double> omega{1.0};
  tk::TwistSpec spec() const { return tk::make_spec(m, beta, theta, omega); }
  void reg(OptionRegistry& r) {
    r.add("m", m, "oscillator mass / frequency");
    r.add("beta", beta, "inverse temperature");
    r.add("theta", theta, "twist angle");
    r.add("omega", omega, "twist weights (one per component)");
  }
};

// --------------------------------------------------------------------------
// verify suites (exit 3 on a failed invariant)
// --------------------------------------------------------------------------

struct VerifyReport {
  int checked = 0, failed = 0;
  void check(const std::string& name, bool ok, double value = 0.0) {
    ++checked;
    if (!ok) ++failed;
    std::printf("%-58s %s   (%.3e)\n", name.c_str(), ok ? "ok" : "FAIL", value);
  }
};

void verify_oscillator(VerifyReport& rep) {
  const auto spec = tk::make_spec(1.0, std::log(2.0), 0.0, {1.0});
  rep.check("partition closed form (gamma = 1/2)",
            std::abs(tk::partition_function(spec) - 4.0) < 1e-12,
            tk::partition_function(spec));
  const auto s2 = tk::make_spec(0.8, 1.3, 1.1, {1.0});
  double worst = 0.0;
  for (double xi : {-0.9, -0.3, 0.2, 0.7, 1.1}) {
    const tk::cplx a = tk::pair_correlation(s2, xi);
    const tk::cplx b = tk::kernel_fourier_sum(s2, xi, 0, 4096);
    const tk::cplx c = tk::pair_correlation_extended(s2, tk::cplx(xi, 0.0));
    worst = std::max({worst, std::abs(a - b), std::abs(a - c)});
  }
  rep.check("kernel vs Fourier vs extension", worst < 1e-5, worst);
  const auto conv = tk::twisted_trace_converged(s2, nullptr, s2.theta, s2.beta, 16, 1e-8,
                                                200000);
  const double rel =
      std::abs(conv.value - tk::partition_function(s2)) / tk::partition_function(s2);
  rep.check("free trace vs closed form", conv.converged && rel < 1e-8, rel);
}

void verify_fock(VerifyReport& rep) {
  const auto spec = tk::make_spec(1.0, 1.0, 0.9, {1.0});
  const auto fock = tk::build_fock(spec, 24);
  double worst = 0.0;
  for (auto kind : {tk::LadderKind::AMinus, tk::LadderKind::APlus,
                    tk::LadderKind::APlusDag, tk::LadderKind::AMinusDag}) {
    tk::HolonomyWord word;
    word.letters = {{tk::LadderKind::AMinus, 0}, {tk::LadderKind::APlusDag, 0}};
    worst = std::max(worst,
                     std::abs(tk::holonomy_residual(fock, spec.theta, spec.beta, kind, 0, word)));
  }
  rep.check("holonomy residuals (word length 2)", worst < 1e-8, worst);
  const auto V = tk::quartic_potential(1, 0.4);
  const auto ham = tk::assemble_hamiltonian(fock, &V);
  const tk::cplx tr = tk::twisted_trace(fock, ham, spec.theta, spec.beta);
  rep.check("twist positivity of interacting trace",
            tr.real() > 0 && std::abs(tr.imag()) < 1e-9 * tr.real(),
            std::abs(tr.imag()) / tr.real());
}

void verify_paths(VerifyReport& rep) {
  const auto spec = tk::make_spec(1.0, 1.0, 1.3, {1.0});
  tk::PathSampler sampler(spec, 128, 0, 11);
  std::vector<std::vector<tk::cplx>> modes;
  sampler.draw_modes(0, modes);
  const tk::cplx wrap = sampler.value_at(modes, 0, spec.beta);
  const tk::cplx expect = std::exp(tk::cplx(0.0, spec.theta)) * sampler.value_at(modes, 0, 0.0);
  rep.check("twisted wraparound of sampled path", std::abs(wrap - expect) < 1e-10,
            std::abs(wrap - expect));
  tk::MomentRequest req;
  req.conj_times = {{0, 0.25}};
  req.plain_times = {{0, 0.75}};
  const auto mc = tk::estimate_moment_mc(req, spec, 20000, 17, 128);
  const tk::cplx exact = tk::wick_moment(req, spec);
  rep.check("two-point MC vs pairing sum (5 sigma)",
            std::abs(mc.value - exact) < 5 * mc.stderr_ + 1e-3,
            std::abs(mc.value - exact));
}

void verify_field(VerifyReport& rep) {
  tk::FieldSpec fs;
  fs.s = 1;
  fs.periods = {tk::two_pi};
  fs.n = 1;
  fs.weights = {1.0};
  fs.m = 0.7;
  fs.beta = 1.1;
  fs.theta = 1.2;
  fs.tau = {0.4};
  fs.k_cut = 3.0;
  double log_prod = 0.0;
  for (const auto& k : tk::momentum_lattice(fs))
    log_prod += std::log(tk::partition_function(tk::mode_oscillator(fs, 0, k)));
  const double diff = std::abs(log_prod - tk::field_log_partition(fs));
  rep.check("field partition factorizes over modes", diff < 1e-12, diff);
  tk::FieldSampler sampler(fs, 32, 0, 5);
  tk::RandomFieldSample sample;
  sampler.draw(0, sample);
  const std::vector<double> x{1.1};
  const std::vector<double> xs{1.1 - fs.tau[0]};
  const tk::cplx lhs = sampler.value_at(sample, 0, x, 0.3 + fs.beta);
  const tk::cplx rhs =
      std::exp(tk::cplx(0.0, fs.theta)) * sampler.value_at(sample, 0, xs, 0.3);
  rep.check("random-field twist relation", std::abs(lhs - rhs) < 1e-10, std::abs(lhs - rhs));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for twisted Gibbs functionals"};
  app.require_subcommand(1);

  std::string config_path, out_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");

  // ---- exact ------------------------------------------------------------
  auto* exact = app.add_subcommand("exact", "closed-form oscillator evaluations");
  OptionRegistry exact_reg(exact);
  CommonSpec exact_spec;
  exact_spec.reg(exact_reg);
  std::string exact_op = "partition";
  double exact_xi = 0.0, exact_xi_im = 0.0, exact_eps2 = 0.0, exact_E = 0.0;
  int exact_j = 0, exact_modes = 4096, exact_steps = 65;
  double exact_xi_min = 0.0, exact_xi_max = 0.0;
  exact_reg.add("op", exact_op,
                "partition | kernel | extended | kernel-table | fourier | zrenorm | "
                "zero-mass | bare | spectrum-bound");
  exact_reg.add("xi", exact_xi, "time difference in [-beta, beta]");
  exact_reg.add("xi-im", exact_xi_im, "imaginary part of xi (extended kernel)");
  exact_reg.add("eps2", exact_eps2, "perturbation eps^2 for zrenorm");
  exact_reg.add("E", exact_E, "frequency for fourier");
  exact_reg.add("j", exact_j, "component index");
  exact_reg.add("modes", exact_modes, "Fourier modes for cross-checks");
  exact_reg.add("xi-min", exact_xi_min, "table start");
  exact_reg.add("xi-max", exact_xi_max, "table end");
  exact_reg.add("steps", exact_steps, "table rows");
  exact->add_option("--out", out_path, "output file (default stdout)");

  // ---- sample -----------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "Gaussian path sampling and moments");
  OptionRegistry sample_reg(sample);
  CommonSpec sample_spec;
  sample_spec.reg(sample_reg);
  int sample_T = 256, sample_modes = 0, sample_dump = 0;
  long sample_count = 100000;
  std::uint64_t sample_seed = 1;
  std::string sample_conj, sample_plain;
  sample_reg.add("grid", sample_T, "time grid size (power of two)");
  sample_reg.add("modes", sample_modes, "mode count (default = grid)");
  sample_reg.add("samples", sample_count, "Monte Carlo samples");
  sample_reg.add("seed", sample_seed, "master seed");
  sample_reg.add("dump", sample_dump, "dump this many sample paths as CSV");
  sample_reg.add("moment-conj", sample_conj, "conjugated factors, \"j:t,j:t\"");
  sample_reg.add("moment-plain", sample_plain, "plain factors, \"j:t,j:t\"");
  sample->add_option("--out", out_path, "output file (default stdout)");

  // ---- oracle -----------------------------------------------------------
  auto* oracle = app.add_subcommand("oracle", "truncated Fock-space evaluations");
  OptionRegistry oracle_reg(oracle);
  CommonSpec oracle_spec;
  oracle_spec.reg(oracle_reg);
  std::string oracle_op = "trace", oracle_pot, oracle_times, oracle_s = "am", oracle_word;
  int oracle_ncut = 20, oracle_trotterN = 16;
  long oracle_budget = 20000;
  double oracle_lambda = 1.0;
  oracle_reg.add("op", oracle_op, "trace | expectation | holonomy | trotter");
  oracle_reg.add("potential", oracle_pot, "potential JSON file or builtin (quartic, abs2)");
  oracle_reg.add("lambda", oracle_lambda, "potential scale factor");
  oracle_reg.add("ncut", oracle_ncut, "per-register occupation cutoff");
  oracle_reg.add("budget", oracle_budget, "dimension budget");
  oracle_reg.add("times", oracle_times, "operators, \"z:j:t,zbar:j:t\"");
  oracle_reg.add("s-op", oracle_s, "holonomy operator: am | ap | apd | amd");
  oracle_reg.add("word", oracle_word, "holonomy word, \"am:0,apd:0\"");
  oracle_reg.add("trotter-N", oracle_trotterN, "Trotter steps");
  oracle->add_option("--out", out_path, "output file (default stdout)");

  // ---- mc ---------------------------------------------------------------
  auto* mc = app.add_subcommand("mc", "reweighted Monte Carlo under H0 + V");
  OptionRegistry mc_reg(mc);
  CommonSpec mc_spec;
  mc_spec.reg(mc_reg);
  std::string mc_pot = "quartic", mc_op = "zrel", mc_conj, mc_plain;
  double mc_lambda = 1.0;
  int mc_T = 256, mc_modes = 0;
  long mc_samples = 100000;
  std::uint64_t mc_seed = 1;
  mc_reg.add("potential", mc_pot, "potential JSON file or builtin (quartic, abs2)");
  mc_reg.add("lambda", mc_lambda, "potential scale factor");
  mc_reg.add("op", mc_op, "zrel | moment");
  mc_reg.add("grid", mc_T, "time grid size");
  mc_reg.add("modes", mc_modes, "mode count (default = grid)");
  mc_reg.add("samples", mc_samples, "Monte Carlo samples");
  mc_reg.add("seed", mc_seed, "master seed");
  mc_reg.add("moment-conj", mc_conj, "conjugated factors, \"j:t\"");
  mc_reg.add("moment-plain", mc_plain, "plain factors, \"j:t\"");
  mc->add_option("--out", out_path, "output file (default stdout)");

  // ---- field ------------------------------------------------------------
  auto* field = app.add_subcommand("field", "free and cutoff fields on the torus");
  OptionRegistry field_reg(field);
  int field_s = 1, field_n = 1, field_T = 64, field_nx = 16;
  std::vector<double> field_periods{tk::two_pi}, field_tau{0.0}, field_omega{1.0},
      field_x{0.0};
  double field_m = 1.0, field_beta = 1.0, field_theta = 0.0, field_kcut = 2.0,
         field_emax = 50.0, field_xi = 0.0, field_lambda = 1.0, field_chi_scale = 0.0;
  bool field_real = false;
  std::string field_op = "partition", field_chi = "gaussian", field_pot = "quartic";
  long field_samples = 2000;
  std::uint64_t field_seed = 1;
  field_reg.add("s", field_s, "spatial dimension");
  field_reg.add("period", field_periods, "torus periods");
  field_reg.add("n", field_n, "field components");
  field_reg.add("omega", field_omega, "twist weights");
  field_reg.add("m", field_m, "mass");
  field_reg.add("beta", field_beta, "inverse temperature");
  field_reg.add("theta", field_theta, "twist angle");
  field_reg.add("tau", field_tau, "spatial twist");
  field_reg.add("kcut", field_kcut, "momentum cutoff");
  field_reg.add("chi", field_chi, "cutoff profile: one | gaussian | sharp");
  field_reg.add("chi-scale", field_chi_scale, "profile scale (default kcut/2)");
  field_reg.add_flag("real", field_real, "real scalar field");
  field_reg.add("op", field_op,
                "partition | lattice | spectrum | coefficient | kernel | sample | zrel");
  field_reg.add("emax", field_emax, "frequency truncation for spectra");
  field_reg.add("xi", field_xi, "time difference");
  field_reg.add("x", field_x, "spatial separation for kernel");
  field_reg.add("grid", field_T, "time grid size");
  field_reg.add("nx", field_nx, "spatial points per dimension");
  field_reg.add("potential", field_pot, "potential for zrel");
  field_reg.add("lambda", field_lambda, "potential scale");
  field_reg.add("samples", field_samples, "Monte Carlo samples");
  field_reg.add("seed", field_seed, "master seed");
  field->add_option("--out", out_path, "output file (default stdout)");

  // ---- limits -----------------------------------------------------------
  auto* limits = app.add_subcommand("limits", "zero-mass and canonical-bound sweeps");
  OptionRegistry limits_reg(limits);
  CommonSpec limits_spec;
  limits_spec.reg(limits_reg);
  std::string limits_op = "zero-mass", limits_pot = "quartic";
  std::vector<double> limits_mgrid{0.1, 0.01, 0.001}, limits_lgrid{0.25, 0.5, 0.75, 1.0};
  double limits_lambda = 1.0;
  int limits_T = 128;
  long limits_samples = 20000;
  std::uint64_t limits_seed = 1;
  limits_reg.add("op", limits_op, "zero-mass | canonical");
  limits_reg.add("potential", limits_pot, "potential file or builtin");
  limits_reg.add("lambda", limits_lambda, "potential scale");
  limits_reg.add("m-grid", limits_mgrid, "mass grid (descending)");
  limits_reg.add("lambda-grid", limits_lgrid, "coupling grid in (0,1]");
  limits_reg.add("grid", limits_T, "time grid size");
  limits_reg.add("samples", limits_samples, "Monte Carlo samples");
  limits_reg.add("seed", limits_seed, "master seed");
  limits->add_option("--out", out_path, "output file (default stdout)");

  // ---- verify -----------------------------------------------------------
  auto* verify = app.add_subcommand("verify", "built-in cross checks");
  std::string verify_suite = "all";
  verify->add_option("--suite", verify_suite, "oscillator | fock | paths | field | all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    json cfg;
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw CLI::ValidationError("config", "cannot open " + config_path);
      f >> cfg;
    }

    if (exact->parsed()) {
      if (!cfg.is_null()) exact_reg.apply_config(cfg);
      const auto spec = exact_spec.spec();
      tk::JsonWriter::Object res;
      if (exact_op == "partition") {
        res.emplace_back("value", tk::partition_function(spec));
      } else if (exact_op == "kernel") {
        const tk::cplx c = tk::pair_correlation(spec, exact_xi, exact_j);
        res.emplace_back("re", c.real());
        res.emplace_back("im", c.imag());
      } else if (exact_op == "extended") {
        const tk::cplx c =
            tk::pair_correlation_extended(spec, tk::cplx(exact_xi, exact_xi_im), exact_j);
        res.emplace_back("re", c.real());
        res.emplace_back("im", c.imag());
      } else if (exact_op == "kernel-table") {
        std::string csv = csv_header_comment(exact_reg);
        csv += "xi,re_C,im_C\n";
        const double lo = exact_xi_min, hi = exact_xi_max == 0.0 ? spec.beta : exact_xi_max;
        for (int i = 0; i < exact_steps; ++i) {
          const double xi = lo + (hi - lo) * i / std::max(1, exact_steps - 1);
          const tk::cplx c = tk::pair_correlation(spec, xi, exact_j);
          csv += tk::fmt17(xi) + "," + tk::fmt17(c.real()) + "," + tk::fmt17(c.imag()) + "\n";
        }
        emit(csv, out_path);
        return 0;
      } else if (exact_op == "fourier") {
        res.emplace_back("value", tk::fourier_coefficient(spec, exact_E, exact_j));
      } else if (exact_op == "zrenorm") {
        res.emplace_back("value", tk::mass_renormalized_Z(spec, std::sqrt(exact_eps2)));
      } else if (exact_op == "zero-mass") {
        res.emplace_back("value", tk::zero_mass_covariance(spec, exact_j));
      } else if (exact_op == "bare") {
        const tk::cplx c = tk::bare_covariance(spec, exact_xi, exact_j);
        res.emplace_back("re", c.real());
        res.emplace_back("im", c.imag());
      } else if (exact_op == "spectrum-bound") {
        res.emplace_back("value", tk::spectrum_bound(spec, exact_j));
      } else {
        throw CLI::ValidationError("op", "unknown exact op: " + exact_op);
      }
      emit(result_json(exact_reg, std::move(res)), out_path);
      return 0;
    }

    if (sample->parsed()) {
      if (!cfg.is_null()) sample_reg.apply_config(cfg);
      const auto spec = sample_spec.spec();
      if (sample_dump > 0) {
        tk::PathSampler sampler(spec, sample_T, sample_modes, sample_seed);
        std::string csv = csv_header_comment(sample_reg);
        csv += "sample,t";
        for (int j = 0; j < spec.components(); ++j)
          csv += ",re_omega_" + std::to_string(j) + ",im_omega_" + std::to_string(j);
        csv += "\n";
        Eigen::FFT<double> fft;
        std::vector<std::vector<tk::cplx>> modes, values;
        std::vector<tk::cplx> bins, work;
        for (int i = 0; i < sample_dump; ++i) {
          sampler.draw_modes(static_cast<std::uint64_t>(i), modes);
          sampler.synthesize(modes, 0.0, values, fft, bins, work);
          for (int k = 0; k < sample_T; ++k) {
            csv += std::to_string(i) + "," + tk::fmt17(k * spec.beta / sample_T);
            for (int j = 0; j < spec.components(); ++j) {
              const tk::cplx v = values[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
              csv += "," + tk::fmt17(v.real()) + "," + tk::fmt17(v.imag());
            }
            csv += "\n";
          }
        }
        emit(csv, out_path);
        return 0;
      }
      tk::MomentRequest req;
      req.conj_times = parse_component_times(sample_conj);
      req.plain_times = parse_component_times(sample_plain);
      const auto est =
          tk::estimate_moment_mc(req, spec, sample_count, sample_seed, sample_T, sample_modes);
      tk::JsonWriter::Object res;
      res.emplace_back("estimate_re", est.value.real());
      res.emplace_back("estimate_im", est.value.imag());
      res.emplace_back("stderr", est.stderr_);
      res.emplace_back("n_samples", est.n_samples);
      res.emplace_back("seed", static_cast<long long>(sample_seed));
      emit(result_json(sample_reg, std::move(res)), out_path);
      return 0;
    }

    if (oracle->parsed()) {
      if (!cfg.is_null()) oracle_reg.apply_config(cfg);
      const auto spec = oracle_spec.spec();
      std::optional<tk::PolyPotential> V;
      if (!oracle_pot.empty())
        V = load_potential(oracle_pot, spec.components(), oracle_lambda);
      tk::JsonWriter::Object res;
      if (V && !tk::check_twist_invariance(*V, spec.weights)) {
        const auto rep = tk::build_fock(spec, oracle_ncut, oracle_budget);
        const auto ham = tk::assemble_hamiltonian(rep, &*V);
        const double comm =
            tk::commutator_interior_norm(rep, ham, spec.theta, V->degree());
        std::fprintf(stderr,
                     "warning: potential is not twist-invariant; "
                     "interior commutator norm with U(theta) is %.3e\n",
                     comm);
      }
      if (oracle_op == "trace") {
        const auto conv = tk::twisted_trace_converged(spec, V ? &*V : nullptr, spec.theta,
                                                      spec.beta, oracle_ncut, 1e-8,
                                                      oracle_budget);
        res.emplace_back("trace_re", conv.value.real());
        res.emplace_back("trace_im", conv.value.imag());
        res.emplace_back("n_cut", conv.n_cut);
        res.emplace_back("converged", conv.converged);
      } else if (oracle_op == "expectation") {
        const auto req = parse_operator_times(oracle_times);
        const auto conv = tk::twisted_expectation_converged(
            spec, V ? &*V : nullptr, req, spec.theta, spec.beta, oracle_ncut, 1e-8,
            oracle_budget);
        res.emplace_back("trace_re", conv.value.real());
        res.emplace_back("trace_im", conv.value.imag());
        res.emplace_back("n_cut", conv.n_cut);
        res.emplace_back("converged", conv.converged);
      } else if (oracle_op == "holonomy") {
        const auto rep = tk::build_fock(spec, oracle_ncut, oracle_budget);
        tk::HolonomyWord word;
        std::stringstream ss(oracle_word);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          const auto colon = tok.find(':');
          if (colon == std::string::npos)
            throw CLI::ValidationError("word", "expected kind:component");
          word.letters.emplace_back(parse_ladder(tok.substr(0, colon)),
                                    std::stoi(tok.substr(colon + 1)));
        }
        const tk::cplx r = tk::holonomy_residual(rep, spec.theta, spec.beta,
                                                 parse_ladder(oracle_s), 0, word);
        res.emplace_back("residual_re", r.real());
        res.emplace_back("residual_im", r.imag());
        res.emplace_back("n_cut", oracle_ncut);
      } else if (oracle_op == "trotter") {
        if (!V) throw CLI::ValidationError("potential", "trotter requires a potential");
        const auto rep = tk::build_fock(spec, oracle_ncut, oracle_budget);
        const tk::cplx tr = tk::trotter_trace(rep, *V, spec.theta, spec.beta, oracle_trotterN);
        res.emplace_back("trace_re", tr.real());
        res.emplace_back("trace_im", tr.imag());
        res.emplace_back("n_cut", oracle_ncut);
        res.emplace_back("steps", oracle_trotterN);
      } else {
        throw CLI::ValidationError("op", "unknown oracle op: " + oracle_op);
      }
      emit(result_json(oracle_reg, std::move(res)), out_path);
      return 0;
    }

    if (mc->parsed()) {
      if (!cfg.is_null()) mc_reg.apply_config(cfg);
      const auto spec = mc_spec.spec();
      const auto V = load_potential(mc_pot, spec.components(), mc_lambda);
      tk::ReweightedEstimate est;
      if (mc_op == "zrel") {
        est = tk::relative_partition_mc(spec, V, mc_T, mc_samples, mc_seed, mc_modes);
      } else if (mc_op == "moment") {
        tk::MomentRequest req;
        req.conj_times = parse_component_times(mc_conj);
        req.plain_times = parse_component_times(mc_plain);
        est = tk::gibbs_expectation_mc(spec, V, req, mc_T, mc_samples, mc_seed, mc_modes);
      } else {
        throw CLI::ValidationError("op", "unknown mc op: " + mc_op);
      }
      tk::JsonWriter::Object res;
      res.emplace_back("estimate_re", est.value.real());
      res.emplace_back("estimate_im", est.value.imag());
      res.emplace_back("stderr", est.stderr_);
      res.emplace_back("n_samples", est.n_samples);
      res.emplace_back("seed", static_cast<long long>(est.seed));
      res.emplace_back("grid_T", est.grid_T);
      res.emplace_back("rule", est.rule);
      res.emplace_back("ess", est.ess);
      res.emplace_back("flagged", est.flagged);
      res.emplace_back("tail_bound", est.tail_bound);
      emit(result_json(mc_reg, std::move(res)), out_path);
      return 0;
    }

    if (field->parsed()) {
      if (!cfg.is_null()) field_reg.apply_config(cfg);
      tk::FieldSpec fs;
      fs.s = field_s;
      fs.periods = field_periods;
      fs.n = field_n;
      fs.weights = field_omega;
      fs.m = field_m;
      fs.beta = field_beta;
      fs.theta = field_theta;
      fs.tau = field_tau;
      fs.k_cut = field_kcut;
      fs.real_field = field_real;
      const double chi_scale = field_chi_scale > 0 ? field_chi_scale : field_kcut / 2;
      if (field_chi == "one")
        fs.chi = tk::CutoffProfile::unity();
      else if (field_chi == "gaussian")
        fs.chi = tk::CutoffProfile::gaussian(chi_scale);
      else if (field_chi == "sharp")
        fs.chi = tk::CutoffProfile::sharp(chi_scale);
      else
        throw CLI::ValidationError("chi", "unknown profile: " + field_chi);
      fs.validate();

      if (field_op == "partition") {
        tk::JsonWriter::Object res;
        res.emplace_back("log_value", tk::field_log_partition(fs));
        res.emplace_back("value", tk::field_partition_function(fs));
        emit(result_json(field_reg, std::move(res)), out_path);
      } else if (field_op == "lattice") {
        std::string csv = csv_header_comment(field_reg);
        csv += "index";
        for (int i = 0; i < fs.s; ++i) csv += ",k" + std::to_string(i);
        csv += "\n";
        const auto lattice = tk::momentum_lattice(fs);
        for (std::size_t i = 0; i < lattice.size(); ++i) {
          csv += std::to_string(i);
          for (double ki : lattice[i]) csv += "," + tk::fmt17(ki);
          csv += "\n";
        }
        emit(csv, out_path);
      } else if (field_op == "spectrum") {
        tk::JsonWriter::Array arr;
        for (double v : tk::covariance_spectrum(fs, field_emax)) arr.emplace_back(v);
        tk::JsonWriter::Object res;
        res.emplace_back("spectrum", std::move(arr));
        emit(result_json(field_reg, std::move(res)), out_path);
      } else if (field_op == "kernel") {
        const tk::cplx c = tk::field_covariance_kernel(fs, 0, field_x, field_xi);
        tk::JsonWriter::Object res;
        res.emplace_back("re", c.real());
        res.emplace_back("im", c.imag());
        emit(result_json(field_reg, std::move(res)), out_path);
      } else if (field_op == "sample") {
        tk::FieldSampler sampler(fs, field_T, 0, field_seed);
        tk::RandomFieldSample s;
        sampler.draw(0, s);
        Eigen::FFT<double> fft;
        std::vector<tk::cplx> bins, work;
        std::vector<std::vector<std::vector<tk::cplx>>> grid;
        sampler.evaluate_grid(s, field_nx, 0.0, 0.0, fft, bins, work, grid);
        std::string csv = csv_header_comment(field_reg);
        csv += "x_index,t_index";
        for (int j = 0; j < fs.n; ++j)
          csv += ",re_phi_" + std::to_string(j) + ",im_phi_" + std::to_string(j);
        csv += "\n";
        const long nx = sampler.spatial_points(field_nx);
        for (long g = 0; g < nx; ++g)
          for (int kt = 0; kt < field_T; ++kt) {
            csv += std::to_string(g) + "," + std::to_string(kt);
            for (int j = 0; j < fs.n; ++j) {
              const tk::cplx v = grid[static_cast<std::size_t>(j)][static_cast<std::size_t>(g)]
                                    [static_cast<std::size_t>(kt)];
              csv += "," + tk::fmt17(v.real()) + "," + tk::fmt17(v.imag());
            }
            csv += "\n";
          }
        emit(csv, out_path);
      } else if (field_op == "zrel") {
        const auto V = load_potential(field_pot, fs.n, field_lambda);
        const auto est = tk::field_relative_partition_mc(fs, V, field_T, field_nx,
                                                         field_samples, field_seed);
        tk::JsonWriter::Object res;
        res.emplace_back("estimate_re", est.value.real());
        res.emplace_back("estimate_im", est.value.imag());
        res.emplace_back("stderr", est.stderr_);
        res.emplace_back("n_samples", est.n_samples);
        res.emplace_back("seed", static_cast<long long>(est.seed));
        res.emplace_back("grid_T", est.grid_T);
        res.emplace_back("ess", est.ess);
        res.emplace_back("flagged", est.flagged);
        emit(result_json(field_reg, std::move(res)), out_path);
      } else {
        throw CLI::ValidationError("op", "unknown field op: " + field_op);
      }
      return 0;
    }

    if (limits->parsed()) {
      if (!cfg.is_null()) limits_reg.apply_config(cfg);
      const auto spec = limits_spec.spec();
      const auto V = load_potential(limits_pot, spec.components(), limits_lambda);
      std::string csv = csv_header_comment(limits_reg);
      csv += "m,lambda,beta,theta,value_re,value_im,stderr,T,samples,seed,label\n";
      auto emit_row = [&](const tk::SweepRow& row) {
        csv += tk::fmt17(row.m) + "," + tk::fmt17(row.lambda) + "," +
               tk::fmt17(row.beta) + "," + tk::fmt17(row.theta) + "," +
               tk::fmt17(row.value.real()) + "," + tk::fmt17(row.value.imag()) + "," +
               tk::fmt17(row.stderr_) + "," + std::to_string(row.grid_T) + "," +
               std::to_string(row.n_samples) + "," + std::to_string(row.seed) + "," +
               row.label + "\n";
      };
      if (limits_op == "zero-mass") {
        const auto sweep = tk::zero_mass_sweep(spec, V, limits_mgrid, limits_T,
                                               limits_samples, limits_seed);
        for (const auto& row : sweep.z_rows) emit_row(row);
        for (const auto& row : sweep.moment_rows) emit_row(row);
      } else if (limits_op == "canonical") {
        const auto sweep = tk::canonical_bound_sweep(spec, V, limits_lgrid, limits_T,
                                                     limits_samples, limits_seed);
        for (const auto& row : sweep.rows) emit_row(row);
        csv += "# fitted_constant=" + tk::fmt17(sweep.fitted_constant) +
               " bound_holds=" + (sweep.bound_holds ? std::string("true") : "false") + "\n";
        if (!sweep.bound_holds) {
          emit(csv, out_path);
          std::fprintf(stderr, "canonical bound violated beyond Monte Carlo error\n");
          return 3;
        }
      } else {
        throw CLI::ValidationError("op", "unknown limits op: " + limits_op);
      }
      emit(csv, out_path);
      return 0;
    }

    if (verify->parsed()) {
      VerifyReport rep;
      if (verify_suite == "oscillator" || verify_suite == "all") verify_oscillator(rep);
      if (verify_suite == "fock" || verify_suite == "all") verify_fock(rep);
      if (verify_suite == "paths" || verify_suite == "all") verify_paths(rep);
      if (verify_suite == "field" || verify_suite == "all") verify_field(rep);
      std::printf("%d checks, %d failed\n", rep.checked, rep.failed);
      return rep.failed == 0 ? 0 : 3;
    }
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "invalid argument: %s\n", e.what());
    return 2;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}

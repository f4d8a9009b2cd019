#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddsplit/energy.hpp"

namespace ddsplit {

enum class Problem { parabolic, hyperbolic };
enum class Splitting { two, three, three_overlap };

inline const char* to_string(Problem p) noexcept { return p == Problem::parabolic ? "parabolic" : "hyperbolic"; }
inline const char* to_string(Splitting s) noexcept {
  switch (s) {
    case Splitting::two: return "two";
    case Splitting::three: return "three";
    case Splitting::three_overlap: return "three-overlap";
  }
  return "?";
}

/// Model experiment on a rectangle, k = 1, f = 0, u0 = amplitude * sin(n1 pi x1) sin(n2 pi x2).
struct ExperimentConfig {
  Problem problem = Problem::parabolic;
  int n1 = 2;
  int n2 = 1;
  double l1 = 1.0;
  double l2 = 1.0;
  int N1 = 40;
  int N2 = 40;
  double T = 0.05;
  int Nsteps = 5;
  SchemeKind scheme = SchemeKind::weighted;
  double sigma = 0.5;
  std::optional<SourceSampling> rhs_sampling;
  ComponentwiseForm componentwise_form = ComponentwiseForm::resolvent;
  double solver_tol = default_solver_tol;
  double hhat = 0.5;
  Splitting splitting = Splitting::two;
  int overlap_halfwidth = 1;
  std::string output_path;
  /// Scales the initial data; 0 gives the zero solution.
  double amplitude = 1.0;

  double tau() const noexcept { return T / Nsteps; }
  bool needs_decomposition() const noexcept {
    return problem == Problem::parabolic ? scheme != SchemeKind::weighted : scheme == SchemeKind::regularized;
  }
};

inline Decomposition build_decomposition(const ExperimentConfig& cfg, const Grid& grid) {
  switch (cfg.splitting) {
    case Splitting::two: return build_two_component(grid, cfg.hhat);
    case Splitting::three: return build_three_component(grid, cfg.hhat, 0);
    case Splitting::three_overlap: return build_three_component(grid, cfg.hhat, cfg.overlap_halfwidth);
  }
  throw InvalidArgument("unknown splitting");
}

/// Checks every precondition that can be checked before stepping.
inline void validate(const ExperimentConfig& cfg) {
  if (cfg.n1 < 1 || cfg.n2 < 1) throw InvalidArgument("mode indices n1, n2 must be positive");
  if (!(cfg.T > 0.0) || !std::isfinite(cfg.T)) throw InvalidArgument("T must be positive");
  if (cfg.Nsteps < 1) throw InvalidArgument("Nsteps must be positive");
  if (!std::isfinite(cfg.sigma) || cfg.sigma < 0.0) throw InvalidArgument("sigma must be nonnegative");
  if (!(cfg.solver_tol > 0.0)) throw InvalidArgument("solver_tol must be positive");
  if (!std::isfinite(cfg.amplitude)) throw InvalidArgument("amplitude must be finite");
  const Grid grid = build_grid(cfg.l1, cfg.l2, cfg.N1, cfg.N2);
  if (cfg.problem == Problem::hyperbolic && cfg.scheme != SchemeKind::weighted &&
      cfg.scheme != SchemeKind::regularized) {
    throw InvalidArgument(std::string("no three-level variant of the ") + to_string(cfg.scheme) + " scheme");
  }
  if (cfg.needs_decomposition()) {
    const Decomposition dec = build_decomposition(cfg, grid);
    if (cfg.problem == Problem::parabolic &&
        (cfg.scheme == SchemeKind::factorized || cfg.scheme == SchemeKind::factorized_commuted) &&
        (dec.p() != 2 || !dec.is_crisp())) {
      throw UnsupportedDecomposition("factorized scheme needs splitting = two");
    }
  }
}

inline double exact_solution(double x1, double x2, double t, int n1, int n2) {
  constexpr double pi = std::numbers::pi;
  const double lambda = pi * pi * (static_cast<double>(n1) * n1 + static_cast<double>(n2) * n2);
  return std::exp(-lambda * t) * std::sin(n1 * pi * x1) * std::sin(n2 * pi * x2);
}

struct ErrorRow {
  int n = 0;
  double t = 0.0;
  double error_l2 = 0.0;
  double error_A = 0.0;
  double energy = 0.0;
  double bound = 0.0;
};

struct ErrorSeries {
  std::vector<ErrorRow> rows;
  std::vector<std::string> warnings;

  double final_error() const { return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().error_l2; }
  double max_error() const {
    double m = 0.0;
    for (const ErrorRow& r : rows) m = std::max(m, r.error_l2);
    return m;
  }
};

namespace detail {

inline SchemeConfig scheme_config(const ExperimentConfig& cfg, const Grid& grid) {
  SchemeConfig s;
  s.kind = cfg.scheme;
  s.sigma = cfg.sigma;
  s.tau = cfg.tau();
  s.rhs_sampling = cfg.rhs_sampling;
  s.componentwise_form = cfg.componentwise_form;
  s.solver_tol = cfg.solver_tol;
  if (cfg.needs_decomposition()) s.decomposition = build_decomposition(cfg, grid);
  return s;
}

inline void check_finite(const GridFunction& y, int n) {
  if (!all_finite(y)) throw NonFiniteValue("non-finite value in the solution at step " + std::to_string(n));
}

template <class F>
auto at_step(int n, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw_error(e.kind(), "step " + std::to_string(n) + ": " + e.what());
  }
}

inline ErrorSeries run_parabolic(const ExperimentConfig& cfg, const Grid& grid, const DiffusionOperator& A) {
  const SchemeConfig scheme = scheme_config(cfg, grid);
  const EnergyFunctional fn = monitored_energy(scheme, A);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ErrorSeries out;
  out.warnings = scheme.warnings();

  auto exact = [&](double t) {
    return sample([&](double x1, double x2) { return cfg.amplitude * exact_solution(x1, x2, t, cfg.n1, cfg.n2); },
                  grid);
  };
  ParabolicState s{exact(0.0), 0.0, 0};
  const GridFunction zero(grid);
  double bound = nan;
  for (int n = 0;; ++n) {
    check_finite(s.y, n);
    const GridFunction err = s.y - exact(s.t);
    double energy = nan;
    try {
      energy = evaluate_energy(fn, s.y).value;
    } catch (const ContractError&) {
      // Below the threshold the functional need not be a norm.
      if (!scheme.below_threshold()) throw;
    }
    if (n == 0 && !scheme.below_threshold()) bound = energy;
    out.rows.push_back(ErrorRow{n, s.t, norm(err), energy_norm(OperatorExpression::diffusion(A), err), energy, bound});
    if (n == cfg.Nsteps) break;
    s = at_step(n + 1, [&] { return step(s, A, scheme, zero); });
  }
  return out;
}

inline ErrorSeries run_hyperbolic(const ExperimentConfig& cfg, const Grid& grid, const DiffusionOperator& A) {
  const double tau = cfg.tau();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::optional<Decomposition> dec;
  if (cfg.scheme == SchemeKind::regularized) dec = build_decomposition(cfg, grid);
  const EnergyFunctional fn{dec ? EnergyKind::S_hyperbolic_regularized : EnergyKind::S_hyperbolic_weighted,
                            cfg.sigma, tau, A, dec, std::min(cfg.solver_tol, 1e-12)};
  ErrorSeries out;
  const double threshold = dec ? hyperbolic_regularized_threshold(dec->p()) : hyperbolic_weighted_threshold();
  const bool above = cfg.sigma >= threshold;
  if (!above) {
    out.warnings.push_back("three-level scheme with sigma = " + std::to_string(cfg.sigma) +
                           " is below its stability threshold " + std::to_string(threshold));
  }

  const GridFunction u0 = sample(
      [&](double x1, double x2) { return cfg.amplitude * exact_solution(x1, x2, 0.0, cfg.n1, cfg.n2); }, grid);
  const GridFunction zero(grid);
  check_finite(u0, 0);
  out.rows.push_back(ErrorRow{0, 0.0, nan, nan, nan, nan});
  HyperbolicState s = init_second_level(u0, zero, A, tau, zero);
  double bound = nan;
  for (int n = 1;; ++n) {
    check_finite(s.y_curr, n);
    double energy = nan;
    try {
      energy = evaluate_energy(fn, s).value;
    } catch (const ContractError& e) {
      if (above) throw_error(e.kind(), "step " + std::to_string(n) + ": " + e.what());
    }
    if (above) bound = n == 1 ? energy : three_level_energy_bound(bound, tau, 0.0);
    out.rows.push_back(ErrorRow{n, s.t, nan, nan, energy, bound});
    if (n == cfg.Nsteps) break;
    s = at_step(n + 1, [&] {
      return dec ? step_regularized_hyperbolic(s, A, *dec, cfg.sigma, tau, zero, cfg.solver_tol)
                 : step_threelevel_weighted(s, A, cfg.sigma, tau, zero, cfg.solver_tol);
    });
  }
  return out;
}

}  // namespace detail

/// Full trajectory with errors at every level. Hyperbolic runs report the energy only.
inline ErrorSeries run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const Grid grid = build_grid(cfg.l1, cfg.l2, cfg.N1, cfg.N2);
  const DiffusionOperator A = assemble_diffusion(grid, [](double, double) { return 1.0; }, 1.0);
  return cfg.problem == Problem::parabolic ? detail::run_parabolic(cfg, grid, A)
                                           : detail::run_hyperbolic(cfg, grid, A);
}

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const ErrorSeries& s, std::ostream& os) {
  os << "n,t,error_l2,error_A,energy,bound\n";
  for (const ErrorRow& r : s.rows) {
    os << r.n << ',' << format_real(r.t) << ',' << format_real(r.error_l2) << ',' << format_real(r.error_A) << ','
       << format_real(r.energy) << ',' << format_real(r.bound) << '\n';
  }
}

// ---- configuration text ----

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw InvalidArgument("invalid value for " + key + ": '" + v + "'");
  return x;
}

inline int parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long x = 0;
  try {
    x = std::stol(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw InvalidArgument("invalid integer for " + key + ": '" + v + "'");
  }
  return static_cast<int>(x);
}

/// Integer count from a real quotient; rejects non-integral results.
inline int count_from_ratio(const std::string& key, double num, double den) {
  const double q = num / den;
  const double r = std::round(q);
  if (!(den > 0.0) || r < 1.0 || std::abs(q - r) > 1e-9 * q) {
    throw InvalidArgument(key + " does not divide its interval into a whole number of steps");
  }
  return static_cast<int>(r);
}

}  // namespace detail

/// Keys in the order they are applied, so that derived keys (h, tau) see the final lengths and T.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "problem", "n1",     "n2",     "l1",           "l2",         "N1",         "N2",
      "N",       "h",      "T",      "Nsteps",       "tau",        "scheme",     "sigma",
      "rhs_sampling", "componentwise_form", "solver_tol", "hhat", "splitting", "overlap_halfwidth",
      "output_path", "amplitude"};
  return keys;
}

inline void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "problem") {
    if (value == "parabolic") cfg.problem = Problem::parabolic;
    else if (value == "hyperbolic") cfg.problem = Problem::hyperbolic;
    else throw InvalidArgument("unknown problem '" + value + "'");
  } else if (key == "n1") {
    cfg.n1 = parse_int(key, value);
  } else if (key == "n2") {
    cfg.n2 = parse_int(key, value);
  } else if (key == "l1") {
    cfg.l1 = parse_real(key, value);
  } else if (key == "l2") {
    cfg.l2 = parse_real(key, value);
  } else if (key == "N1") {
    cfg.N1 = parse_int(key, value);
  } else if (key == "N2") {
    cfg.N2 = parse_int(key, value);
  } else if (key == "N") {
    cfg.N1 = cfg.N2 = parse_int(key, value);
  } else if (key == "h") {
    const double h = parse_real(key, value);
    if (!(h > 0.0)) throw InvalidArgument("h must be positive");
    cfg.N1 = count_from_ratio(key, cfg.l1, h);
    cfg.N2 = count_from_ratio(key, cfg.l2, h);
  } else if (key == "T") {
    cfg.T = parse_real(key, value);
  } else if (key == "Nsteps") {
    cfg.Nsteps = parse_int(key, value);
  } else if (key == "tau") {
    const double tau = parse_real(key, value);
    if (!(tau > 0.0)) throw InvalidArgument("tau must be positive");
    cfg.Nsteps = count_from_ratio(key, cfg.T, tau);
  } else if (key == "scheme") {
    const auto k = scheme_from_string(value);
    if (!k) throw InvalidArgument("unknown scheme '" + value + "'");
    cfg.scheme = *k;
  } else if (key == "sigma") {
    cfg.sigma = parse_real(key, value);
  } else if (key == "rhs_sampling") {
    if (value == "weighted_time") cfg.rhs_sampling = SourceSampling::weighted_time;
    else if (value == "new_level") cfg.rhs_sampling = SourceSampling::new_level;
    else if (value == "old_level") cfg.rhs_sampling = SourceSampling::old_level;
    else if (value == "midpoint") cfg.rhs_sampling = SourceSampling::midpoint;
    else throw InvalidArgument("unknown rhs_sampling '" + value + "'");
  } else if (key == "componentwise_form") {
    if (value == "resolvent") cfg.componentwise_form = ComponentwiseForm::resolvent;
    else if (value == "two_stage") cfg.componentwise_form = ComponentwiseForm::two_stage;
    else throw InvalidArgument("unknown componentwise_form '" + value + "'");
  } else if (key == "solver_tol") {
    cfg.solver_tol = parse_real(key, value);
  } else if (key == "hhat") {
    cfg.hhat = parse_real(key, value);
  } else if (key == "splitting") {
    if (value == "two") cfg.splitting = Splitting::two;
    else if (value == "three") cfg.splitting = Splitting::three;
    else if (value == "three-overlap") cfg.splitting = Splitting::three_overlap;
    else throw InvalidArgument("unknown splitting '" + value + "'");
  } else if (key == "overlap_halfwidth") {
    cfg.overlap_halfwidth = parse_int(key, value);
  } else if (key == "output_path") {
    cfg.output_path = value;
  } else if (key == "amplitude") {
    cfg.amplitude = parse_real(key, value);
  } else {
    throw InvalidArgument("unknown configuration key '" + key + "'");
  }
}

using ConfigValues = std::map<std::string, std::string>;

/// key = value per line, '#' starts a comment. Later duplicates win.
inline ConfigValues parse_config_text(std::istream& in) {
  ConfigValues out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    out[key] = value;
  }
  return out;
}

inline ConfigValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  return parse_config_text(in);
}

/// Applies values in the canonical key order; unknown keys are rejected.
inline void apply_config(ExperimentConfig& cfg, const ConfigValues& values) {
  for (const auto& [k, v] : values) {
    (void)v;
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw InvalidArgument("unknown configuration key '" + k + "'");
    }
  }
  for (const std::string& k : config_keys()) {
    const auto it = values.find(k);
    if (it != values.end()) apply_config_value(cfg, k, it->second);
  }
}

// ---- presets ----

struct NamedExperiment {
  std::string label;
  ExperimentConfig cfg;
};

inline ExperimentConfig basic_case() { return ExperimentConfig{}; }

namespace detail {

inline std::vector<NamedExperiment> weighted_vs_factorized(const ExperimentConfig& base) {
  std::vector<NamedExperiment> out;
  for (SchemeKind k : {SchemeKind::weighted, SchemeKind::factorized}) {
    for (double sigma : {0.5, 1.0}) {
      ExperimentConfig c = base;
      c.scheme = k;
      c.sigma = sigma;
      out.push_back({std::string(to_string(k)) + (sigma == 0.5 ? "_sigma0.5" : "_sigma1"), c});
    }
  }
  return out;
}

}  // namespace detail

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"fig5", "fig6", "fig7", "fig8", "fig9"};
  return names;
}

/// fig5 basic case; fig6 tau = 0.005; fig7 h = 1/80; fig8 hhat = 0.25;
/// fig9 regularized (sigma = 1) and component-wise (sigma = 1/2).
inline std::vector<NamedExperiment> preset(const std::string& name, const ExperimentConfig& base = basic_case()) {
  ExperimentConfig c = base;
  if (name == "fig5") return detail::weighted_vs_factorized(c);
  if (name == "fig6") {
    c.Nsteps *= 2;
    return detail::weighted_vs_factorized(c);
  }
  if (name == "fig7") {
    c.N1 *= 2;
    c.N2 *= 2;
    return detail::weighted_vs_factorized(c);
  }
  if (name == "fig8") {
    c.hhat *= 0.5;
    return detail::weighted_vs_factorized(c);
  }
  if (name == "fig9") {
    ExperimentConfig r = c, w = c;
    r.scheme = SchemeKind::regularized;
    r.sigma = 1.0;
    w.scheme = SchemeKind::componentwise;
    w.sigma = 0.5;
    return {{"regularized_sigma1", r}, {"componentwise_sigma0.5", w}};
  }
  throw InvalidArgument("unknown preset '" + name + "'");
}

// ---- convergence studies ----

enum class StudyMode { time, space, both, subdomains };

inline std::optional<StudyMode> study_mode_from_string(const std::string& s) {
  if (s == "time") return StudyMode::time;
  if (s == "space") return StudyMode::space;
  if (s == "both") return StudyMode::both;
  if (s == "subdomains") return StudyMode::subdomains;
  return std::nullopt;
}

struct StudyRow {
  int level = 0;
  double error = std::numeric_limits<double>::quiet_NaN();  // error_l2 at t = T
  double order = std::numeric_limits<double>::quiet_NaN();  // log2(e_{level-1} / e_level)
  std::string failure;                                      // non-empty if the level did not run
  std::optional<ErrorKind> failure_kind;
};

inline ExperimentConfig refine(ExperimentConfig c, StudyMode mode, int level) {
  for (int i = 0; i < level; ++i) {
    if (mode == StudyMode::time || mode == StudyMode::both) c.Nsteps *= 2;
    if (mode == StudyMode::space || mode == StudyMode::both) {
      c.N1 *= 2;
      c.N2 *= 2;
    }
    if (mode == StudyMode::subdomains) c.hhat *= 0.5;
  }
  return c;
}

/// Runs `levels` configurations concurrently; failures are reported per level.
inline std::vector<StudyRow> convergence_study(const ExperimentConfig& cfg, int levels, StudyMode mode) {
  if (levels < 2) throw InvalidArgument("a convergence study needs at least 2 levels");
  if (cfg.problem != Problem::parabolic) throw InvalidArgument("convergence studies need the parabolic problem");
  std::vector<std::future<double>> jobs;
  for (int k = 0; k < levels; ++k) {
    jobs.push_back(std::async(std::launch::async, [c = refine(cfg, mode, k)] { return run_experiment(c).final_error(); }));
  }
  std::vector<StudyRow> rows(static_cast<std::size_t>(levels));
  for (int k = 0; k < levels; ++k) {
    StudyRow& r = rows[static_cast<std::size_t>(k)];
    r.level = k;
    try {
      r.error = jobs[static_cast<std::size_t>(k)].get();
    } catch (const Error& e) {
      r.failure = e.what();
      r.failure_kind = e.kind();
    }
    if (k > 0 && r.failure.empty() && rows[static_cast<std::size_t>(k - 1)].failure.empty()) {
      r.order = std::log2(rows[static_cast<std::size_t>(k - 1)].error / r.error);
    }
  }
  return rows;
}

inline void write_study_csv(const std::vector<StudyRow>& rows, std::ostream& os) {
  os << "level,error,order\n";
  for (const StudyRow& r : rows) {
    os << r.level << ',' << format_real(r.error) << ',' << format_real(r.order) << '\n';
  }
}

}  // namespace ddsplit

// Command-line driver: run experiments, convergence studies and stability certification.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "ddsplit/ddsplit.hpp"

namespace {

constexpr int exit_certify_failed = 1;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

int exit_code(const ddsplit::Error& e) { return e.is_numerical() ? exit_numerical : exit_config; }

/// Every config key is also a flag; flags override the file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.set_help_flag("--help", "print this help message and exit");
    app.add_option("--config", config_path, "key = value configuration file");
    for (const std::string& key : ddsplit::config_keys()) {
      if (key == "output_path") continue;
      app.add_option("--" + key, values[key], key);
    }
    app.add_option("--out,--output_path", values["output_path"], "output CSV path");
  }

  ddsplit::ExperimentConfig resolve() const {
    ddsplit::ConfigValues merged;
    if (!config_path.empty()) merged = ddsplit::read_config_file(config_path);
    for (const auto& [k, v] : values) {
      if (!v.empty()) merged[k] = v;
    }
    ddsplit::ExperimentConfig cfg;
    ddsplit::apply_config(cfg, merged);
    return cfg;
  }
};

void write_series(const ddsplit::ErrorSeries& s, const std::string& path) {
  for (const std::string& w : s.warnings) std::cerr << "warning: " << w << '\n';
  if (path.empty()) {
    ddsplit::write_csv(s, std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw ddsplit::InvalidArgument("cannot write '" + path + "'");
  ddsplit::write_csv(s, out);
}

std::string labelled_path(const std::string& path, const std::string& label) {
  if (path.empty()) return path;
  const std::filesystem::path p(path);
  const std::string ext = p.has_extension() ? p.extension().string() : ".csv";
  return (p.parent_path() / (p.stem().string() + "_" + label + ext)).string();
}

int run_command(const ConfigFlags& flags, const std::string& preset) {
  const ddsplit::ExperimentConfig cfg = flags.resolve();
  if (preset.empty()) {
    write_series(ddsplit::run_experiment(cfg), cfg.output_path);
    return 0;
  }
  for (const ddsplit::NamedExperiment& e : ddsplit::preset(preset, cfg)) {
    const ddsplit::ErrorSeries s = ddsplit::run_experiment(e.cfg);
    if (cfg.output_path.empty()) std::cout << "# " << preset << ' ' << e.label << '\n';
    write_series(s, labelled_path(cfg.output_path, e.label));
  }
  return 0;
}

int study_command(const ConfigFlags& flags, const std::string& mode_name, int levels) {
  const auto mode = ddsplit::study_mode_from_string(mode_name);
  if (!mode) throw ddsplit::InvalidArgument("unknown study mode '" + mode_name + "'");
  const ddsplit::ExperimentConfig cfg = flags.resolve();
  const auto rows = ddsplit::convergence_study(cfg, levels, *mode);
  if (cfg.output_path.empty()) {
    ddsplit::write_study_csv(rows, std::cout);
  } else {
    std::ofstream out(cfg.output_path);
    if (!out) throw ddsplit::InvalidArgument("cannot write '" + cfg.output_path + "'");
    ddsplit::write_study_csv(rows, out);
  }
  int code = 0;
  for (const auto& r : rows) {
    if (r.failure.empty()) continue;
    std::cerr << "level " << r.level << " failed: " << r.failure << '\n';
    const int c = r.failure_kind && ddsplit::Error(*r.failure_kind, "").is_numerical() ? exit_numerical : exit_config;
    code = std::max(code, c);
  }
  return code;
}

struct CertifyOptions {
  std::string problem = "parabolic";
  std::string scheme = "factorized";
  int grid_n = 8;
  double sigma = 0.5;
  double tau = 0.01;
  double hhat = 0.5;
  std::string splitting = "two";
  int overlap_halfwidth = 1;
  int steps = 50;
};

void print_kv(const char* key, double v) { std::cout << key << '=' << ddsplit::format_real(v) << '\n'; }

int certify_command(const CertifyOptions& o) {
  ddsplit::ExperimentConfig cfg;
  ddsplit::apply_config_value(cfg, "problem", o.problem);
  ddsplit::apply_config_value(cfg, "scheme", o.scheme);
  ddsplit::apply_config_value(cfg, "splitting", o.splitting);
  cfg.N1 = cfg.N2 = o.grid_n;
  cfg.sigma = o.sigma;
  cfg.hhat = o.hhat;
  cfg.overlap_halfwidth = o.overlap_halfwidth;
  if (!(o.tau > 0.0)) throw ddsplit::InvalidArgument("tau must be positive");
  if (o.steps < 1) throw ddsplit::InvalidArgument("steps must be positive");

  const ddsplit::Grid grid = ddsplit::build_grid(1.0, 1.0, o.grid_n, o.grid_n);
  ddsplit::DenseOperator::check_size(grid);
  const ddsplit::DiffusionOperator A = ddsplit::assemble_diffusion(grid, [](double, double) { return 1.0; }, 1.0);
  std::optional<ddsplit::Decomposition> dec;
  if (cfg.needs_decomposition()) dec = ddsplit::build_decomposition(cfg, grid);

  bool certified = false, above = false;
  std::cout << "problem=" << o.problem << "\nscheme=" << o.scheme << "\ninterior_nodes=" << grid.size() << '\n';
  print_kv("sigma", o.sigma);
  print_kv("tau", o.tau);
  if (cfg.problem == ddsplit::Problem::parabolic) {
    ddsplit::SchemeConfig sc;
    sc.kind = cfg.scheme;
    sc.sigma = o.sigma;
    sc.tau = o.tau;
    sc.decomposition = dec;
    if ((sc.kind == ddsplit::SchemeKind::factorized || sc.kind == ddsplit::SchemeKind::factorized_commuted) &&
        (!dec || dec->p() != 2 || !dec->is_crisp())) {
      throw ddsplit::UnsupportedDecomposition("factorized scheme needs splitting = two");
    }
    const auto rep = ddsplit::certify(sc, A, o.steps);
    print_kv("threshold", rep.threshold);
    print_kv("transition_norm", rep.transition_norm);
    for (std::size_t a = 0; a < rep.factor_norms.size(); ++a) {
      std::cout << "factor_norm_" << a + 1 << '=' << ddsplit::format_real(rep.factor_norms[a]) << '\n';
    }
    std::cout << "energy_monotone=" << (rep.energy_monotone ? "true" : "false") << '\n';
    print_kv("worst_energy_growth", rep.worst_energy_growth);
    certified = rep.certified();
    above = rep.above_threshold;
  } else {
    if (cfg.scheme != ddsplit::SchemeKind::weighted && cfg.scheme != ddsplit::SchemeKind::regularized) {
      throw ddsplit::InvalidArgument("hyperbolic certification supports weighted and regularized");
    }
    const auto rep = ddsplit::certify_hyperbolic(A, dec ? &*dec : nullptr, o.sigma, o.tau, o.steps);
    print_kv("threshold", rep.threshold);
    print_kv("min_eigenvalue_D", rep.min_eigenvalue_D);
    print_kv("max_energy_drift", rep.max_energy_drift);
    certified = rep.certified();
    above = rep.above_threshold;
  }
  if (!above) {
    std::cout << "status=diagnostic\n";
    std::cerr << "warning: sigma is below the stability threshold; nothing is certified\n";
    return 0;
  }
  std::cout << "status=" << (certified ? "certified" : "failed") << '\n';
  return certified ? 0 : exit_certify_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Substructuring domain-decomposition time stepping"};
  app.require_subcommand(1);

  ConfigFlags run_flags, study_flags;
  std::string preset;
  auto* run = app.add_subcommand("run", "run one experiment or a preset and write its error series");
  run_flags.attach(*run);
  run->add_option("--preset", preset, "fig5 | fig6 | fig7 | fig8 | fig9");

  std::string mode = "both";
  int levels = 3;
  auto* study = app.add_subcommand("study", "convergence study from a base configuration");
  study_flags.attach(*study);
  study->add_option("--mode", mode, "time | space | both | subdomains");
  study->add_option("--levels", levels, "number of refinement levels");

  CertifyOptions cert;
  auto* certify = app.add_subcommand("certify", "dense stability certificate on a small grid");
  certify->add_option("--problem", cert.problem, "parabolic | hyperbolic");
  certify->add_option("--scheme", cert.scheme, "scheme name");
  certify->add_option("--grid-n", cert.grid_n, "cells per axis on the unit square");
  certify->add_option("--sigma", cert.sigma, "weight");
  certify->add_option("--tau", cert.tau, "time step");
  certify->add_option("--hhat", cert.hhat, "coarse step");
  certify->add_option("--splitting", cert.splitting, "two | three | three-overlap");
  certify->add_option("--overlap_halfwidth", cert.overlap_halfwidth, "overlap half-width");
  certify->add_option("--steps", cert.steps, "steps per random trajectory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    if (*run) return run_command(run_flags, preset);
    if (*study) return study_command(study_flags, mode, levels);
    return certify_command(cert);
  } catch (const ddsplit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  }
}

// Command-line front end: validate configs, compute certificates, run single
// experiments, and drive parameter sweeps.
//
// Exit codes: 0 success, 2 config error, 3 infeasible tightening,
// 4 certificate violation (non-monotone hull, inadmissible step, or a
// breached envelope/constraint), 5 numeric failure.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "obilc/config.hpp"
#include "obilc/experiment.hpp"

namespace {

using namespace obilc;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitCertificate = 4;
constexpr int kExitNumeric = 5;

EmitFormats parse_formats(const std::string& csv_list) {
  EmitFormats formats{false, false, false};
  std::stringstream ss(csv_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "csv") {
      formats.csv = true;
    } else if (item == "json") {
      formats.json = true;
    } else if (item == "plot") {
      formats.plot = true;
    } else if (!item.empty()) {
      throw ConfigError("unknown output format '" + item + "' (expected csv, json, plot)");
    }
  }
  if (!formats.csv && !formats.json && !formats.plot) {
    throw ConfigError("no output format selected");
  }
  return formats;
}

int exit_code_for_points(const ExperimentResult& result) {
  if (result.any_certificate_violation()) return kExitCertificate;
  if (result.any_run_error()) return kExitNumeric;
  bool any_ok = false;
  PointError first_error = PointError::none;
  for (const auto& point : result.points) {
    if (!point.failed()) {
      any_ok = true;
    } else if (first_error == PointError::none) {
      first_error = point.error;
    }
  }
  if (any_ok) return kExitOk;
  switch (first_error) {
    case PointError::config: return kExitConfig;
    case PointError::infeasible_tightening: return kExitInfeasible;
    case PointError::certificate: return kExitCertificate;
    default: return kExitNumeric;
  }
}

void print_point_summary(const PointResult& point) {
  if (point.failed()) {
    std::printf("  point %-10g FAILED: %s\n", point.parameter, point.error_message.c_str());
    return;
  }
  const auto& c = point.certificates;
  if (!std::isnan(point.parameter)) std::printf("  point %g:\n", point.parameter);
  std::printf("    mu=%.6g L=%.6g mu~=%.6g L~=%.6g\n", c.mu, c.L, c.mu_tilde, c.L_tilde);
  std::printf("    alpha=%.6g (window (0, %.6g), default %.6g)\n", c.alpha, c.alpha_window_hi,
              c.alpha_default);
  std::printf("    eta=%.6g rate_eps=%.6g gamma=%.6g\n", c.eta, c.rate_eps, c.gamma);
  std::printf("    delta=%.6g delta_inv_mu=%.6g beta1=%.6g beta2=%.6g |ubar-ustar|_W=%.6g\n",
              c.delta, c.delta_inverse_mu, c.beta1, c.beta2, c.ubar_ustar_distance);
  if (!point.alpha_warning.empty()) {
    std::printf("    warning: %s\n", point.alpha_warning.c_str());
  }
  for (const auto& run : point.runs) {
    std::printf("    seed %llu: %s after %ld iterations, final cost %.9g, "
                "constraints %s, envelope %s\n",
                static_cast<unsigned long long>(run.seed), to_string(run.trace.status),
                run.trace.iterations(),
                run.trace.records.empty() ? 0.0 : run.trace.records.back().surrogate_cost,
                run.constraints_ok ? "ok" : "VIOLATED", run.envelope_ok ? "ok" : "VIOLATED");
  }
}

int dispatch(const std::string& verb, const std::string& config_path,
             const std::string& out_dir, const std::string& formats_list,
             std::optional<std::uint64_t> seed_override) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed_override) {
    cfg.seed = *seed_override;
    cfg.echo["seed"] = *seed_override;
    const bool explicit_sweep_seeds =
        cfg.echo.contains("sweep") && cfg.echo["sweep"].contains("seeds");
    if (cfg.sweep && !explicit_sweep_seeds) cfg.sweep->seeds = {*seed_override};
  }

  if (verb == "validate") {
    std::printf("config OK: %s\n", config_path.c_str());
    return kExitOk;
  }

  const EmitFormats formats = parse_formats(formats_list);
  ExperimentResult result;
  if (verb == "certify") {
    result = certify_experiment(cfg);
  } else if (verb == "run") {
    result = run_experiment(cfg);
  } else {
    result = run_sweep(cfg);
  }

  const auto files = emit(result, out_dir, formats);
  std::printf("%s finished in %.2f s; %zu file(s) under %s\n", verb.c_str(),
              result.wall_seconds, files.size(), out_dir.c_str());
  for (const auto& point : result.points) print_point_summary(point);
  return exit_code_for_points(result);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust constrained iterative learning control: certificates, runs, sweeps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string formats = "csv,json";
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* sub, bool with_outputs) {
    sub->add_option("--config", config_path, "experiment configuration (JSON)")
        ->required();
    if (with_outputs) {
      sub->add_option("--out", out_dir, "output directory");
      sub->add_option("--format", formats, "comma-separated: csv,json,plot");
      sub->add_option("--seed", seed_override, "override the config seed");
    }
  };
  add_common(app.add_subcommand("validate", "parse and validate a config"), false);
  add_common(app.add_subcommand("certify", "compute certificates only"), true);
  add_common(app.add_subcommand("run", "run a single experiment"), true);
  add_common(app.add_subcommand("sweep", "run a parameter sweep"), true);

  CLI11_PARSE(app, argc, argv);
  const std::string verb = app.get_subcommands().front()->get_name();

  try {
    return dispatch(verb, config_path, out_dir, formats, seed_override);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const EmptyTightenedSetError& e) {
    std::fprintf(stderr, "infeasible tightening: %s\n", e.what());
    return kExitInfeasible;
  } catch (const NotStronglyMonotoneError& e) {
    std::fprintf(stderr, "certificate violation: %s\n", e.what());
    return kExitCertificate;
  } catch (const StepOutOfRangeError& e) {
    std::fprintf(stderr, "certificate violation: %s\n", e.what());
    return kExitCertificate;
  } catch (const Error& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumeric;
  }
}

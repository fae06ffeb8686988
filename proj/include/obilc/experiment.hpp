#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "obilc/analysis.hpp"
#include "obilc/config.hpp"
#include "obilc/policy.hpp"

namespace obilc {

/// One closed-loop run at a fixed seed, with the post-run validation verdicts.
struct RunOutput {
  std::uint64_t seed = 0;
  IterationTrace trace;
  double sup_noise = 0.0;      ///< realized sup_j |d_j|_2
  bool constraints_ok = true;  ///< every iterate/measurement within 1e-8 slack
  bool envelope_ok = true;     ///< ISS envelope holds at every iteration
};

enum class PointError { none, config, infeasible_tightening, certificate, numeric };

/// One experiment at one sweep-grid value (or the single configured run).
struct PointResult {
  double parameter = std::numeric_limits<double>::quiet_NaN();
  PointError error = PointError::none;
  std::string error_message;
  CertificateReport certificates;
  OraclePoints oracle;
  std::string alpha_warning;
  std::vector<RunOutput> runs;

  double median_final_cost = std::numeric_limits<double>::quiet_NaN();
  double median_iterations = std::numeric_limits<double>::quiet_NaN();
  double max_violation = -kInf;

  bool failed() const { return error != PointError::none; }
};

struct ExperimentResult {
  nlohmann::json config_echo;
  Vector reference;  ///< tracking reference, for plot-data emission
  std::vector<PointResult> points;
  double wall_seconds = 0.0;  ///< console diagnostics only; never emitted

  bool any_certificate_violation() const;
  bool any_run_error() const;
};

/// Build plant, uncertainty, tightened set, and certificates, then run the
/// learning loop once per configured seed. Module errors propagate with
/// stage context.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// One sub-experiment per grid value; per-point failures are recorded and the
/// sweep continues. The same seeds (and so the same disturbance sequences)
/// are used at every point unless the sweep spec overrides them.
ExperimentResult run_sweep(const ExperimentConfig& cfg);

/// Certificates and oracle points only; no closed-loop runs.
ExperimentResult certify_experiment(const ExperimentConfig& cfg);

struct EmitFormats {
  bool csv = true;
  bool json = true;
  bool plot = false;
};

/// Writes the report and per-run traces under out_dir; returns the file list.
/// Outputs are byte-deterministic functions of (config, seed).
std::vector<std::string> emit(const ExperimentResult& result, const std::string& out_dir,
                              EmitFormats formats = {});

}  // namespace obilc

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "obilc/lifted.hpp"
#include "obilc/uncertainty.hpp"

namespace obilc {

struct SweepSpec {
  std::string parameter;  ///< "model_blend" or "rad_d"
  std::vector<double> grid;
  std::vector<std::uint64_t> seeds;  ///< one run per (grid value, seed)
};

/// Fully resolved experiment description. Parsing is strict: unknown keys are
/// rejected and validation failures carry the offending field path.
struct ExperimentConfig {
  LiftedSystem plant;  ///< the simulator's ground truth
  UncertaintySet uncertainty;
  ConvexSet U;
  ConvexSet Y;
  Box D;
  Matrix Q;
  Matrix R;
  Vector r;
  Vector lambda;  ///< blend weights defining the policy model

  std::optional<double> alpha_override;
  double stop_eps = 1e-8;
  long k_max = 200;
  std::uint64_t seed = 1;
  Vector u0;  ///< empty means zeros
  std::optional<SweepSpec> sweep;

  nlohmann::json echo;  ///< the validated input document, re-emitted verbatim
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

}  // namespace obilc

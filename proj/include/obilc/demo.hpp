#pragma once

#include "obilc/lifted.hpp"
#include "obilc/uncertainty.hpp"

namespace obilc {

/// Built-in stand-in plant: a discrete double integrator (dt = 0.05) with a
/// proportional-derivative tracking loop closed around it, horizon T = 50,
/// following a smooth S-curve position reference. Outputs per step are
/// (position, velocity); the feedforward input enters next to the feedback.
///
/// Ships with matching defaults for the whole experiment: a four-vertex
/// uncertainty hull (gain and dynamics spreads whose uniform blend reproduces
/// the true map), a velocity box on the output, free inputs, a small
/// disturbance box, the block-diagonal tracking weights, and the stacked
/// reference.
struct DemoPlant {
  LtvRealization ltv;
  LiftedSystem sys;
  UncertaintySet uncertainty;
  ConvexSet U;
  ConvexSet Y;
  Box D;
  Matrix Q;
  Matrix R;
  Vector r;

  static constexpr long kHorizon = 50;
  static constexpr double kDt = 0.05;
  static constexpr double kProportionalGain = 20.0;
  static constexpr double kDerivativeGain = 8.0;
  static constexpr double kDetunedProportionalGain = 12.0;
  static constexpr double kDetunedDerivativeGain = 5.0;
  static constexpr double kGainSpread = 0.12;
  static constexpr double kDynamicsSpread = 0.35;
  static constexpr double kVelocityLimit = 0.5;
  static constexpr double kPositionWeight = 100.0;
  static constexpr double kInputWeight = 0.01;
  static constexpr double kPositionNoise = 1e-5;
  static constexpr double kVelocityNoise = 1e-6;

  Eigen::Index inputs() const { return sys.inputs(); }
  Eigen::Index outputs() const { return sys.outputs(); }
};

DemoPlant make_demo_plant();

}  // namespace obilc

#pragma once

#include <cstdint>
#include <vector>

#include "obilc/sets.hpp"

namespace obilc {

/// Affine trajectory map y = G u + w (+ d). Rows are outputs stacked
/// time-major as y(0)..y(T); columns are inputs u(0)..u(T-1).
struct LiftedSystem {
  Matrix G;
  Vector w;

  LiftedSystem() = default;
  LiftedSystem(Matrix G_in, Vector w_in);

  Eigen::Index inputs() const { return G.cols(); }
  Eigen::Index outputs() const { return G.rows(); }
};

/// Finite-horizon time-varying state-space data
///   x(i+1) = A(i) x(i) + B(i) u(i),  y(i) = C(i) x(i) + c(i),  x(0) = x0,
/// with A, B over i = 0..T-1 and C, c over i = 0..T.
struct LtvRealization {
  std::vector<Matrix> A;
  std::vector<Matrix> B;
  std::vector<Matrix> C;
  std::vector<Vector> c;
  Vector x0;

  Eigen::Index horizon() const { return static_cast<Eigen::Index>(A.size()); }
  Eigen::Index state_dim() const { return x0.size(); }
  Eigen::Index input_dim() const { return B.empty() ? 0 : B.front().cols(); }
  Eigen::Index output_dim() const { return C.empty() ? 0 : C.front().rows(); }

  /// Checks the full dimension chain; throws DimensionError naming the first
  /// offending index.
  void validate() const;
};

/// Unrolls the recursion into the stacked (G, w). G is block lower triangular
/// with zero diagonal blocks: y(i) depends on u(j) only for j < i.
LiftedSystem build_lifted(const LtvRealization& ltv);

/// One trial: returns G u + w + d.
Vector run_trial(const LiftedSystem& sys, const Vector& u, const Vector& d);

/// Iteration-varying disturbance source: either a seeded uniform sampler over
/// a compact box containing zero, or an explicit stored sequence.
class DisturbanceModel {
 public:
  /// Seeded sampler, uniform over the box.
  DisturbanceModel(Box support, std::uint64_t seed);
  /// Explicit sequence; every entry must lie in the box.
  DisturbanceModel(Box support, std::vector<Vector> sequence);

  /// Deterministic in (seed, k); the result lies in the box componentwise.
  Vector sample(std::uint64_t k) const;

  const Box& support() const { return support_; }
  std::uint64_t seed() const { return seed_; }
  bool has_explicit_sequence() const { return !sequence_.empty(); }

  static DisturbanceModel zero(Eigen::Index m);

 private:
  Box support_;
  std::uint64_t seed_ = 0;
  std::vector<Vector> sequence_;
};

/// Free function form mirroring the other operations.
Vector sample_disturbance(const DisturbanceModel& model, std::uint64_t k);

}  // namespace obilc

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "obilc/qp.hpp"
#include "obilc/sets.hpp"

namespace obilc {

/// One extreme point [G_i w_i] of the convex-hull uncertainty set.
struct UncertaintyVertex {
  Matrix G;
  Vector w;
};

/// Convex-hull description of the admissible (G, w) pairs, with the blend
/// weights that define the nominal model.
struct UncertaintySet {
  std::vector<UncertaintyVertex> vertices;
  Vector nominal_weights;

  UncertaintySet() = default;
  UncertaintySet(std::vector<UncertaintyVertex> verts, Vector weights);

  Eigen::Index num_vertices() const { return static_cast<Eigen::Index>(vertices.size()); }
  Eigen::Index inputs() const { return vertices.front().G.cols(); }
  Eigen::Index outputs() const { return vertices.front().G.rows(); }
};

/// Checks lambda against the simplex (sum = 1 within 1e-12, entries >= -1e-12,
/// negatives clipped) and returns the blended (M, w_M).
std::pair<Matrix, Vector> blend_model(const UncertaintySet& unc, const Vector& lambda);

/// Y (-) D for box or half-space Y and compact box D containing zero.
/// Returns nullopt when the difference is empty.
std::optional<ConvexSet> pontryagin_diff(const ConvexSet& Y, const Box& D);
std::optional<Box> pontryagin_diff(const Box& Y, const Box& D);

/// Inputs that keep every vertex model inside Y (-) D while staying in U.
/// Construction compiles everything to one stacked half-space system over the
/// input and runs a feasibility solve; an empty set throws
/// EmptyTightenedSetError carrying the infeasibility certificate.
class TightenedSet {
 public:
  TightenedSet(ConvexSet input_set, ConvexSet output_set, Box disturbance_set,
               const UncertaintySet& unc);

  Eigen::Index dim() const { return stacked_.dim(); }
  const HalfspaceSystem& halfspaces() const { return stacked_; }
  const Vector& feasible_point() const { return feasible_point_; }

  const ConvexSet& input_set() const { return input_set_; }
  const ConvexSet& output_set() const { return output_set_; }
  const Box& disturbance_set() const { return disturbance_set_; }
  const ConvexSet& shrunken_output_set() const { return shrunken_output_set_; }

  /// Definitional membership: v in U and G_i v + w_i in Y (-) D for all i.
  bool contains(const Vector& v, double tol) const;

  /// Rows of the original U and Y, kept for closed-loop diagnostics.
  const HalfspaceSystem& input_rows() const { return input_rows_; }
  const HalfspaceSystem& output_rows() const { return output_rows_; }

  const std::vector<UncertaintyVertex>& vertices() const { return vertices_; }

 private:
  ConvexSet input_set_;
  ConvexSet output_set_;
  Box disturbance_set_;
  ConvexSet shrunken_output_set_;
  std::vector<UncertaintyVertex> vertices_;
  HalfspaceSystem stacked_;
  HalfspaceSystem input_rows_;
  HalfspaceSystem output_rows_;
  Vector feasible_point_;
};

/// Convenience constructor mirroring the operation name.
TightenedSet build_tightened_set(const ConvexSet& U, const ConvexSet& Y, const Box& D,
                                 const UncertaintySet& unc);

/// Outcome of the robust membership test. When ok is false, the witness names
/// the violated vertex (-1 for the input set), the row, and the magnitude.
struct RobustCheck {
  bool ok = true;
  int vertex = -1;
  Eigen::Index row = -1;
  double violation = 0.0;
  std::string describe() const;
};

/// True iff u is in U and G_i u + w_i lies in Y (-) D for every vertex,
/// within a machine tolerance on the half-space rows.
RobustCheck robust_output_check(const UncertaintySet& unc, const ConvexSet& U,
                                const ConvexSet& Y, const Box& D, const Vector& u,
                                double tol = 1e-9);

/// W-weighted projection onto a tightened set.
Vector weighted_projection(const Vector& x, const Matrix& W, const TightenedSet& set,
                           QpSettings settings = {});

}  // namespace obilc

#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <variant>

#include "obilc/errors.hpp"

namespace obilc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Stacked half-space system {x | A x <= b}.
struct HalfspaceSystem {
  Matrix A;
  Vector b;

  HalfspaceSystem() = default;
  HalfspaceSystem(Matrix A_in, Vector b_in);

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index dim() const { return A.cols(); }

  /// Largest violation max_i(a_i'x - b_i); <= 0 means x is feasible.
  double violation(const Vector& x) const;
  bool contains(const Vector& x, double tol) const { return violation(x) <= tol; }

  /// Stack another system below this one (dimensions must match).
  void append(const HalfspaceSystem& other);

  static HalfspaceSystem empty_system(Eigen::Index dim);
};

/// Axis-aligned interval set; +-infinity marks an unbounded coordinate.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Vector& x, double tol) const;
  bool is_compact() const;
  bool contains_zero() const;

  /// Support function h(a) = sup_{d in box} a'd. Requires a compact box.
  double support(const Vector& a) const;

  /// Infinity-norm radius: smallest r with box contained in {|x|_inf <= r}.
  double radius() const;

  /// Half-space rows for the finite bounds only (unbounded coordinates are omitted).
  HalfspaceSystem halfspaces() const;

  static Box unbounded(Eigen::Index n);
  static Box centered(double half_width, Eigen::Index n);
  static Box zero(Eigen::Index n);
};

/// General half-space polytope {x | A x <= b}.
struct Polytope {
  Matrix A;
  Vector b;

  Polytope() = default;
  Polytope(Matrix A_in, Vector b_in);

  Eigen::Index dim() const { return A.cols(); }
  bool contains(const Vector& x, double tol) const;
  HalfspaceSystem halfspaces() const { return HalfspaceSystem(A, b); }

  /// Decided by a feasibility solve on first call, cached afterwards.
  bool is_empty() const;

 private:
  mutable std::optional<bool> empty_cache_;
};

/// A constraint set in either interval or general half-space form.
using ConvexSet = std::variant<Box, Polytope>;

Eigen::Index dim(const ConvexSet& set);
bool contains(const ConvexSet& set, const Vector& x, double tol);
HalfspaceSystem halfspaces(const ConvexSet& set);

}  // namespace obilc

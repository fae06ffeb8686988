#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace obilc {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Inconsistent matrix/vector dimensions; the message names the offending index.
struct DimensionError : Error {
  using Error::Error;
};

/// The quadratic cost matrix failed the positive-definiteness check.
struct NonConvexError : Error {
  using Error::Error;
};

/// Robust strong-monotonicity constant mu <= 0; the policy certificates do not apply.
struct NotStronglyMonotoneError : Error {
  double mu;
  explicit NotStronglyMonotoneError(double mu_value)
      : Error("robust strong-monotonicity constant is not positive: mu = " +
              std::to_string(mu_value)),
        mu(mu_value) {}
};

/// Step length outside the admissible window.
struct StepOutOfRangeError : Error {
  using Error::Error;
};

/// The tightened feasible set is empty; carries the Farkas ray from the
/// feasibility solve when one is available.
struct EmptyTightenedSetError : Error {
  Eigen::VectorXd certificate;
  explicit EmptyTightenedSetError(std::string msg, Eigen::VectorXd cert = {})
      : Error(std::move(msg)), certificate(std::move(cert)) {}
};

/// Numeric failure inside an iterative solver.
struct SolverError : Error {
  using Error::Error;
};

/// Configuration parse or validation failure; the message carries the field path.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace obilc

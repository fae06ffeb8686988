#pragma once

#include <Eigen/Dense>
#include <optional>

#include "obilc/sets.hpp"

namespace obilc {

/// Solver knobs. The defaults meet the KKT contract on well-scaled problems;
/// everything is overridable per instance.
struct QpSettings {
  double kkt_tol = 1e-8;   ///< absolute KKT tolerance, scaled by (1 + |q|_inf)
  int max_iter = 20000;    ///< total splitting-iteration budget
  double rho = 0.1;        ///< dual step size (adapted online)
  double sigma = 1e-6;     ///< primal regularization
  double relax = 1.6;      ///< over-relaxation factor
  int check_every = 25;    ///< termination/infeasibility test period
  bool adaptive_rho = true;
  double infeas_tol = 1e-10;  ///< relative certificate tolerance
};

enum class QpStatus { optimal, infeasible, max_iter };

const char* to_string(QpStatus status);

/// Primal/dual solution with the KKT residuals of the returned iterate.
/// status == optimal guarantees all three residuals are below the scaled
/// tolerance and lambda >= -1e-10 componentwise.
struct QpSolution {
  Vector v;
  Vector lambda;
  double stationarity = 0.0;
  double primal_infeasibility = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
  QpStatus status = QpStatus::max_iter;
  Vector infeasibility_certificate;  ///< Farkas ray (lambda >= 0, A'lambda ~ 0, b'lambda < 0)
};

/// Strictly convex QP  min 1/2 v'Pv + q'v  s.t.  Av <= b.
/// Construction checks symmetry (1e-10 relative) and positive definiteness.
struct QuadraticProgram {
  Matrix P;
  Vector q;
  HalfspaceSystem constraints;

  QuadraticProgram(Matrix P_in, Vector q_in, HalfspaceSystem cons);
};

/// Dense splitting solver with a single KKT factorization reused across solves.
///
/// The iteration alternates a proximal step on the quadratic with a projection
/// onto the constraint slab plus an over-relaxed dual update. Candidate
/// solutions are polished by solving the equality-constrained KKT system of
/// the detected active set; every returned "optimal" passes a full KKT
/// residual verification at the scaled tolerance. Constraint rows are
/// normalized internally, so solutions are invariant under positive row
/// scaling of (A, b).
class DenseQpSolver {
 public:
  DenseQpSolver(Matrix P, HalfspaceSystem constraints, QpSettings settings = {});

  /// Solve with the stored b; q is the per-call linear term.
  QpSolution solve(const Vector& q);
  QpSolution solve(const Vector& q, const Vector& b);
  QpSolution solve(const Vector& q, const Vector& b, const Vector& v_warm,
                   const Vector& lambda_warm);

  Eigen::Index dim() const { return n_; }
  Eigen::Index num_constraints() const { return h_; }
  const QpSettings& settings() const { return settings_; }

 private:
  struct Candidate {
    Vector x;
    Vector lambda;  // unscaled duals
    double stat, prim, comp;
    bool valid = false;
  };

  void factorize();
  void residuals(const Vector& q, const Vector& b, const Vector& x, const Vector& lambda,
                 double& stat, double& prim, double& comp) const;
  Candidate polish(const Vector& q, const Vector& b, const Vector& x,
                   const Vector& y_scaled) const;
  bool infeasibility_certificate_valid(const Vector& delta_y, const Vector& b) const;

  QpSettings settings_;
  Eigen::Index n_ = 0, h_ = 0;
  Matrix P_;
  Matrix A_scaled_;       // rows normalized to unit inf-norm
  Vector row_scale_;      // s_i = |a_i|_inf
  Vector b_default_;      // scaled copy of the construction-time b
  double rho_ = 0.1;
  Eigen::PartialPivLU<Matrix> kkt_lu_;
  Eigen::LLT<Matrix> unconstrained_llt_;
};

/// One-shot interface over DenseQpSolver.
QpSolution solve(const QuadraticProgram& qp,
                 std::optional<std::pair<Vector, Vector>> warm_start = std::nullopt,
                 QpSettings settings = {});

/// argmin_{v: Av <= b} |v - x|_W^2. Throws SolverError if the solve fails.
Vector weighted_projection(const Vector& x, const Matrix& W, const HalfspaceSystem& set,
                           QpSettings settings = {});

struct FeasibilityResult {
  bool feasible = false;
  Vector point;        ///< satisfies all rows to 1e-8 when feasible
  Vector certificate;  ///< Farkas ray when infeasible
};

/// Phase-1 check for {x | Ax <= b}, realized as a projection of the origin.
FeasibilityResult feasibility_check(const HalfspaceSystem& set, QpSettings settings = {});

}  // namespace obilc

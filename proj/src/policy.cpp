#include "obilc/policy.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace obilc {

namespace {

void validate_psd(const Matrix& S, const char* what) {
  if (S.rows() != S.cols()) throw DimensionError(std::string(what) + " is not square");
  const double scale = std::max(1.0, S.lpNorm<Eigen::Infinity>());
  if ((S - S.transpose()).lpNorm<Eigen::Infinity>() > 1e-10 * scale) {
    throw NonConvexError(std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw NonConvexError(std::string(what) + " is not positive semidefinite");
  }
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

PolicyConfig::PolicyConfig(Matrix Q_in, Matrix R_in, Vector r_in, Matrix M_in, double alpha_in,
                           std::shared_ptr<const TightenedSet> X_in)
    : Q(std::move(Q_in)),
      R(std::move(R_in)),
      r(std::move(r_in)),
      M(std::move(M_in)),
      alpha(alpha_in),
      X(std::move(X_in)) {
  const Eigen::Index m = M.rows();
  const Eigen::Index n = M.cols();
  if (Q.rows() != m || Q.cols() != m) {
    throw DimensionError("policy config: Q is " + std::to_string(Q.rows()) + "x" +
                         std::to_string(Q.cols()) + ", expected " + std::to_string(m) + "x" +
                         std::to_string(m));
  }
  if (R.rows() != n || R.cols() != n) {
    throw DimensionError("policy config: R is " + std::to_string(R.rows()) + "x" +
                         std::to_string(R.cols()) + ", expected " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  if (r.size() != m) {
    throw DimensionError("policy config: reference has length " + std::to_string(r.size()) +
                         ", expected " + std::to_string(m));
  }
  if (!X) throw DimensionError("policy config: missing tightened set");
  if (X->dim() != n) {
    throw DimensionError("policy config: tightened set has dimension " +
                         std::to_string(X->dim()) + ", expected " + std::to_string(n));
  }
  if (!(alpha > 0.0)) throw StepOutOfRangeError("policy config: step length must be positive");
  validate_psd(Q, "output weight Q");
  validate_psd(R, "input weight R");

  W = M.transpose() * Q * M + R;
  W = 0.5 * (W + W.transpose());  // kill rounding asymmetry before the SPD check
  Eigen::SelfAdjointEigenSolver<Matrix> es(W, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw NonConvexError("policy config: preconditioner W = M'QM + R is not positive definite");
  }
}

void PolicyConfig::check_alpha() {
  alpha_warning.clear();
  if (!alpha_window) return;
  const auto [lo, hi] = *alpha_window;
  if (alpha > lo && alpha < hi) return;
  const std::string msg = "step length " + std::to_string(alpha) +
                          " lies outside the certified window (" + std::to_string(lo) + ", " +
                          std::to_string(hi) + ")";
  if (!alpha_overridden) throw StepOutOfRangeError("policy config: " + msg);
  alpha_warning = msg + "; proceeding on explicit override";
}

Vector gradient_surrogate(const Vector& u, const Vector& y, const PolicyConfig& cfg) {
  if (u.size() != cfg.inputs() || y.size() != cfg.outputs()) {
    throw DimensionError("gradient surrogate: dimension mismatch");
  }
  return cfg.M.transpose() * (cfg.Q * (y - cfg.r)) + cfg.R * u;
}

double surrogate_cost(const Vector& u, const Vector& y, const PolicyConfig& cfg) {
  if (u.size() != cfg.inputs() || y.size() != cfg.outputs()) {
    throw DimensionError("surrogate cost: dimension mismatch");
  }
  const Vector e = y - cfg.r;
  return 0.5 * e.dot(cfg.Q * e) + 0.5 * u.dot(cfg.R * u);
}

Policy::Policy(const PolicyConfig& cfg)
    : cfg_(cfg),
      solver_(cfg.W, cfg.X->halfspaces(), cfg.qp_settings),
      b_(cfg.X->halfspaces().b) {}

Vector Policy::solve_program(const Vector& q) {
  QpSolution sol = has_warm_ ? solver_.solve(q, b_, warm_v_, warm_lambda_)
                             : solver_.solve(q, b_);
  if (sol.status == QpStatus::infeasible) {
    throw SolverError("policy step: projection program reported infeasible constraints");
  }
  if (sol.status != QpStatus::optimal) {
    throw SolverError("policy step: projection program stalled (stationarity " +
                      std::to_string(sol.stationarity) + ", primal " +
                      std::to_string(sol.primal_infeasibility) + ")");
  }
  warm_v_ = sol.v;
  warm_lambda_ = sol.lambda;
  has_warm_ = true;
  return sol.v;
}

Vector Policy::project(const Vector& u) {
  return solve_program(-(cfg_.W * u));
}

Vector Policy::step(const Vector& u, const Vector& y) {
  // argmin_v 1/2|v - u|_W^2 + alpha v'F(u,y) over the tightened set.
  const Vector fbar = gradient_surrogate(u, y, cfg_);
  return solve_program(cfg_.alpha * fbar - cfg_.W * u);
}

Vector policy_step(const Vector& u, const Vector& y, const PolicyConfig& cfg) {
  Policy policy(cfg);
  return policy.step(u, y);
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::converged: return "converged";
    case RunStatus::k_max_reached: return "k_max";
    case RunStatus::error: return "error";
  }
  return "unknown";
}

IterationTrace run_ilc(const LiftedSystem& plant, const DisturbanceModel& disturbance,
                       const PolicyConfig& cfg, const Vector& u0, const TraceOracle& oracle) {
  if (plant.inputs() != cfg.inputs() || plant.outputs() != cfg.outputs()) {
    throw DimensionError("run_ilc: plant and policy dimensions differ");
  }
  if (disturbance.support().dim() != plant.outputs()) {
    throw DimensionError("run_ilc: disturbance dimension differs from plant output");
  }

  IterationTrace trace;
  const auto& X = *cfg.X;

  auto annotate = [&](IterationRecord& rec) {
    rec.surrogate_cost = surrogate_cost(rec.u, rec.y, cfg);
    rec.true_cost = kNaN;
    if (oracle.H && oracle.f) {
      rec.true_cost = 0.5 * rec.u.dot(*oracle.H * rec.u) + oracle.f->dot(rec.u);
    }
    auto w_dist = [&](const Vector& ref) {
      const Vector e = rec.u - ref;
      return std::sqrt(e.dot(cfg.W * e));
    };
    rec.dist_to_ubar = oracle.u_bar ? w_dist(*oracle.u_bar) : kNaN;
    rec.dist_to_ustar = oracle.u_star ? w_dist(*oracle.u_star) : kNaN;
    double viol = -kInf;
    if (X.input_rows().rows() > 0) viol = std::max(viol, X.input_rows().violation(rec.u));
    if (X.output_rows().rows() > 0) viol = std::max(viol, X.output_rows().violation(rec.y));
    rec.max_violation = std::isfinite(viol) ? viol : 0.0;
  };

  Vector u_init = u0;
  if (u_init.size() == 0) u_init = Vector::Zero(cfg.inputs());
  if (u_init.size() != cfg.inputs()) {
    throw DimensionError("run_ilc: initial input has length " + std::to_string(u_init.size()) +
                         ", expected " + std::to_string(cfg.inputs()));
  }

  try {
    Policy policy(cfg);
    Vector u = policy.project(u_init);
    double prev_cost = 0.0;
    for (long k = 0;; ++k) {
      IterationRecord rec;
      rec.k = k;
      rec.u = u;
      rec.d = disturbance.sample(static_cast<std::uint64_t>(k));
      rec.y = run_trial(plant, u, rec.d);
      annotate(rec);
      const double cost = rec.surrogate_cost;
      trace.records.push_back(std::move(rec));

      if (k >= 1 && std::abs(cost - prev_cost) <= cfg.stop_eps) {
        trace.status = RunStatus::converged;
        break;
      }
      if (k >= cfg.k_max) {
        trace.status = RunStatus::k_max_reached;
        break;
      }
      prev_cost = cost;
      u = policy.step(u, trace.records.back().y);
    }
  } catch (const Error& e) {
    trace.status = RunStatus::error;
    trace.error_message = e.what();
  }
  return trace;
}

}  // namespace obilc

#include "obilc/qp.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <vector>

namespace obilc {

namespace {

void validate_spd(const Matrix& P, const char* what) {
  if (P.rows() != P.cols()) {
    throw DimensionError(std::string(what) + " is not square");
  }
  const double scale = std::max(1.0, P.lpNorm<Eigen::Infinity>());
  if ((P - P.transpose()).lpNorm<Eigen::Infinity>() > 1e-10 * scale) {
    throw NonConvexError(std::string(what) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(P, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
    throw NonConvexError(std::string(what) + " is not positive definite (min eigenvalue " +
                         std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
}

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

}  // namespace

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

QuadraticProgram::QuadraticProgram(Matrix P_in, Vector q_in, HalfspaceSystem cons)
    : P(std::move(P_in)), q(std::move(q_in)), constraints(std::move(cons)) {
  if (P.rows() != q.size()) {
    throw DimensionError("quadratic program: P is " + std::to_string(P.rows()) + "x" +
                         std::to_string(P.cols()) + " but q has length " +
                         std::to_string(q.size()));
  }
  if (constraints.rows() > 0 && constraints.dim() != P.rows()) {
    throw DimensionError("quadratic program: constraints act on dimension " +
                         std::to_string(constraints.dim()) + ", expected " +
                         std::to_string(P.rows()));
  }
  validate_spd(P, "quadratic cost matrix");
}

DenseQpSolver::DenseQpSolver(Matrix P, HalfspaceSystem constraints, QpSettings settings)
    : settings_(settings), P_(std::move(P)) {
  n_ = P_.rows();
  h_ = constraints.rows();
  validate_spd(P_, "quadratic cost matrix");
  rho_ = settings_.rho;

  row_scale_ = Vector::Ones(h_);
  A_scaled_ = constraints.A;
  b_default_ = constraints.b;
  for (Eigen::Index i = 0; i < h_; ++i) {
    const double s = constraints.A.row(i).lpNorm<Eigen::Infinity>();
    if (s == 0.0) {
      throw DimensionError("qp solver: zero constraint row at index " + std::to_string(i));
    }
    if (!std::isfinite(constraints.b[i])) {
      throw DimensionError("qp solver: non-finite bound at row " + std::to_string(i));
    }
    row_scale_[i] = s;
    A_scaled_.row(i) /= s;
    b_default_[i] /= s;
  }

  unconstrained_llt_.compute(P_);
  if (unconstrained_llt_.info() != Eigen::Success) {
    throw NonConvexError("qp solver: Cholesky factorization of the cost matrix failed");
  }
  if (h_ > 0) factorize();
}

void DenseQpSolver::factorize() {
  Matrix K(n_ + h_, n_ + h_);
  K.topLeftCorner(n_, n_) = P_;
  K.topLeftCorner(n_, n_).diagonal().array() += settings_.sigma;
  K.topRightCorner(n_, h_) = A_scaled_.transpose();
  K.bottomLeftCorner(h_, n_) = A_scaled_;
  K.bottomRightCorner(h_, h_) = Matrix::Zero(h_, h_);
  K.bottomRightCorner(h_, h_).diagonal().setConstant(-1.0 / rho_);
  kkt_lu_.compute(K);
}

void DenseQpSolver::residuals(const Vector& q, const Vector& b, const Vector& x,
                              const Vector& y_scaled, double& stat, double& prim,
                              double& comp) const {
  Vector grad = P_ * x + q;
  if (h_ > 0) grad.noalias() += A_scaled_.transpose() * y_scaled;
  stat = inf_norm(grad);
  prim = 0.0;
  comp = 0.0;
  if (h_ > 0) {
    const Vector slack = A_scaled_ * x - b;  // scaled rows
    prim = std::max(0.0, (slack.array() * row_scale_.array()).maxCoeff());
    comp = std::abs(y_scaled.dot(slack));
  }
}

bool DenseQpSolver::infeasibility_certificate_valid(const Vector& e, const Vector& b) const {
  const double en = inf_norm(e);
  if (en <= 0.0) return false;
  const double tol = std::max(settings_.infeas_tol, 1e-12) * en;
  if (e.minCoeff() < -tol) return false;
  if (inf_norm(A_scaled_.transpose() * e) > std::max(tol, 1e-9 * en)) return false;
  return b.dot(e) < -std::max(tol, 1e-12 * en * std::max(1.0, inf_norm(b)));
}

DenseQpSolver::Candidate DenseQpSolver::polish(const Vector& q, const Vector& b,
                                               const Vector& x, const Vector& y_scaled) const {
  Candidate cand;
  const double y_norm = inf_norm(y_scaled);
  const Vector slack = b - A_scaled_ * x;

  std::vector<bool> active(static_cast<size_t>(h_), false);
  const double y_thresh = 1e-10 * std::max(1.0, y_norm);
  const double slack_thresh = 1e-7 * (1.0 + inf_norm(b));
  for (Eigen::Index i = 0; i < h_; ++i) {
    active[static_cast<size_t>(i)] = y_scaled[i] > y_thresh || slack[i] < slack_thresh;
  }

  constexpr double kReg = 1e-11;
  for (int round = 0; round < 5; ++round) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < h_; ++i) {
      if (active[static_cast<size_t>(i)]) idx.push_back(i);
    }
    const Eigen::Index na = static_cast<Eigen::Index>(idx.size());

    Vector x_hat;
    Vector nu = Vector::Zero(na);
    if (na == 0) {
      x_hat = unconstrained_llt_.solve(-q);
    } else {
      Matrix Aact(na, n_);
      Vector bact(na);
      for (Eigen::Index j = 0; j < na; ++j) {
        Aact.row(j) = A_scaled_.row(idx[static_cast<size_t>(j)]);
        bact[j] = b[idx[static_cast<size_t>(j)]];
      }
      Matrix K(n_ + na, n_ + na);
      K.topLeftCorner(n_, n_) = P_;
      K.topRightCorner(n_, na) = Aact.transpose();
      K.bottomLeftCorner(na, n_) = Aact;
      K.bottomRightCorner(na, na) = Matrix::Zero(na, na);
      Matrix K_reg = K;
      K_reg.topLeftCorner(n_, n_).diagonal().array() += kReg;
      K_reg.bottomRightCorner(na, na).diagonal().array() -= kReg;

      Vector rhs(n_ + na);
      rhs.head(n_) = -q;
      rhs.tail(na) = bact;

      Eigen::PartialPivLU<Matrix> lu(K_reg);
      Vector sol = lu.solve(rhs);
      for (int refine = 0; refine < 3; ++refine) {
        sol += lu.solve(rhs - K * sol);
      }
      x_hat = sol.head(n_);
      nu = sol.tail(na);
    }

    // Active-set refinement: drop rows with negative multipliers, add violated rows.
    bool changed = false;
    const double nu_drop = 1e-9 * std::max(1.0, inf_norm(nu));
    for (Eigen::Index j = 0; j < na; ++j) {
      if (nu[j] < -nu_drop) {
        active[static_cast<size_t>(idx[static_cast<size_t>(j)])] = false;
        changed = true;
      }
    }
    const Vector resid = A_scaled_ * x_hat - b;
    for (Eigen::Index i = 0; i < h_; ++i) {
      if (!active[static_cast<size_t>(i)] && resid[i] > 1e-11 * (1.0 + std::abs(b[i]))) {
        active[static_cast<size_t>(i)] = true;
        changed = true;
      }
    }
    if (!changed) {
      cand.x = std::move(x_hat);
      cand.lambda = Vector::Zero(h_);
      for (Eigen::Index j = 0; j < na; ++j) {
        cand.lambda[idx[static_cast<size_t>(j)]] = std::max(0.0, nu[j]);
      }
      residuals(q, b, cand.x, cand.lambda, cand.stat, cand.prim, cand.comp);
      cand.valid = true;
      return cand;
    }
  }
  return cand;  // refinement did not settle; caller keeps the splitting iterate
}

QpSolution DenseQpSolver::solve(const Vector& q) { return solve(q, row_scale_.cwiseProduct(b_default_)); }

QpSolution DenseQpSolver::solve(const Vector& q, const Vector& b) {
  return solve(q, b, Vector::Zero(n_), Vector::Zero(h_));
}

QpSolution DenseQpSolver::solve(const Vector& q, const Vector& b_in, const Vector& v_warm,
                                const Vector& lambda_warm) {
  if (q.size() != n_) {
    throw DimensionError("qp solve: q has length " + std::to_string(q.size()) + ", expected " +
                         std::to_string(n_));
  }
  if (b_in.size() != h_) {
    throw DimensionError("qp solve: b has length " + std::to_string(b_in.size()) +
                         ", expected " + std::to_string(h_));
  }
  QpSolution out;
  const double tol = settings_.kkt_tol * (1.0 + inf_norm(q));

  if (h_ == 0) {
    out.v = unconstrained_llt_.solve(-q);
    out.lambda = Vector::Zero(0);
    residuals(q, Vector::Zero(0), out.v, out.lambda, out.stationarity,
              out.primal_infeasibility, out.complementarity);
    out.status = out.stationarity <= tol ? QpStatus::optimal : QpStatus::max_iter;
    return out;
  }

  const Vector b = b_in.cwiseQuotient(row_scale_);

  Vector x = v_warm.size() == n_ ? v_warm : Vector::Zero(n_);
  Vector y = Vector::Zero(h_);
  if (lambda_warm.size() == h_) {
    y = lambda_warm.cwiseProduct(row_scale_).cwiseMax(0.0);
  }
  Vector z = (A_scaled_ * x).cwiseMin(b);

  Candidate best;
  double admm_eps = 1e-6;
  Vector rhs(n_ + h_), sol(n_ + h_), w(h_), y_prev(h_);
  int iter = 0;

  auto consider = [&](Candidate&& c) {
    if (!c.valid) return;
    const double score = std::max({c.stat, c.prim, c.comp});
    if (!best.valid || score < std::max({best.stat, best.prim, best.comp})) best = std::move(c);
  };

  while (iter < settings_.max_iter) {
    ++iter;
    y_prev = y;

    rhs.head(n_) = settings_.sigma * x - q;
    rhs.tail(h_) = z - y / rho_;
    sol = kkt_lu_.solve(rhs);

    const auto x_tilde = sol.head(n_);
    w = z + (sol.tail(h_) - y) / rho_;      // z_tilde
    w = settings_.relax * w + (1.0 - settings_.relax) * z;
    x = settings_.relax * x_tilde + (1.0 - settings_.relax) * x;
    z = (w + y / rho_).cwiseMin(b);
    y += rho_ * (w - z);

    if (iter % settings_.check_every != 0 && iter != settings_.max_iter) continue;

    // Primal infeasibility test on the dual increment direction.
    const Vector delta_y = y - y_prev;
    if (infeasibility_certificate_valid(delta_y, b)) {
      Vector cert = delta_y.cwiseMax(0.0).cwiseQuotient(row_scale_);
      cert /= inf_norm(cert);
      out.v = x;
      out.lambda = y.cwiseQuotient(row_scale_).cwiseMax(0.0);
      out.infeasibility_certificate = cert;
      out.iterations = iter;
      out.status = QpStatus::infeasible;
      residuals(q, b, x, y, out.stationarity, out.primal_infeasibility, out.complementarity);
      return out;
    }

    double stat, prim, comp;
    residuals(q, b, x, y, stat, prim, comp);
    Candidate raw{x, y, stat, prim, comp, true};
    consider(std::move(raw));

    const double prim_ref = std::max({inf_norm(A_scaled_ * x), inf_norm(z), 1.0});
    const double dual_ref =
        std::max({inf_norm(P_ * x), inf_norm(A_scaled_.transpose() * y), inf_norm(q), 1.0});
    const double r_prim = inf_norm(A_scaled_ * x - z);
    const double r_dual = stat;

    if (r_prim <= admm_eps * prim_ref && r_dual <= admm_eps * dual_ref) {
      consider(polish(q, b, x, y));
      if (best.valid && best.stat <= tol && best.prim <= tol && best.comp <= tol) break;
      admm_eps = std::max(admm_eps * 1e-2, 1e-15);
    }

    if (settings_.adaptive_rho && iter % (4 * settings_.check_every) == 0) {
      const double ratio =
          (r_prim / prim_ref) / std::max(r_dual / dual_ref, 1e-16);
      double rho_new = std::clamp(rho_ * std::sqrt(ratio), 1e-6, 1e6);
      if (rho_new > 5.0 * rho_ || rho_new < rho_ / 5.0) {
        rho_ = rho_new;
        factorize();
      }
    }
  }

  if (!best.valid) {
    double stat, prim, comp;
    residuals(q, b, x, y, stat, prim, comp);
    best = Candidate{x, y, stat, prim, comp, true};
    consider(polish(q, b, x, y));
  } else if (!(best.stat <= tol && best.prim <= tol && best.comp <= tol)) {
    consider(polish(q, b, best.x, best.lambda));
  }

  out.v = best.x;
  // Candidates carry row-scaled duals; unscale and clamp at the boundary.
  out.lambda = best.lambda.cwiseQuotient(row_scale_).cwiseMax(0.0);
  {
    Vector y_scaled = out.lambda.cwiseProduct(row_scale_);
    residuals(q, b, out.v, y_scaled, out.stationarity, out.primal_infeasibility,
              out.complementarity);
  }
  out.iterations = iter;
  out.status = (out.stationarity <= tol && out.primal_infeasibility <= tol &&
                out.complementarity <= tol)
                   ? QpStatus::optimal
                   : QpStatus::max_iter;
  return out;
}

QpSolution solve(const QuadraticProgram& qp, std::optional<std::pair<Vector, Vector>> warm_start,
                 QpSettings settings) {
  DenseQpSolver solver(qp.P, qp.constraints, settings);
  if (warm_start) {
    return solver.solve(qp.q, qp.constraints.b, warm_start->first, warm_start->second);
  }
  return solver.solve(qp.q, qp.constraints.b);
}

Vector weighted_projection(const Vector& x, const Matrix& W, const HalfspaceSystem& set,
                           QpSettings settings) {
  DenseQpSolver solver(W, set, settings);
  QpSolution sol = solver.solve(-(W * x), set.b, x, Vector::Zero(set.rows()));
  if (sol.status == QpStatus::infeasible) {
    throw SolverError("weighted projection onto an empty constraint set");
  }
  if (sol.status != QpStatus::optimal) {
    throw SolverError("weighted projection did not reach the KKT tolerance (residuals " +
                      std::to_string(std::max({sol.stationarity, sol.primal_infeasibility,
                                               sol.complementarity})) +
                      ")");
  }
  return sol.v;
}

FeasibilityResult feasibility_check(const HalfspaceSystem& set, QpSettings settings) {
  FeasibilityResult result;
  if (set.rows() == 0) {
    result.feasible = true;
    result.point = Vector::Zero(set.dim());
    return result;
  }
  DenseQpSolver solver(Matrix::Identity(set.dim(), set.dim()), set, settings);
  QpSolution sol = solver.solve(Vector::Zero(set.dim()), set.b);
  if (sol.status == QpStatus::infeasible) {
    result.feasible = false;
    result.certificate = sol.infeasibility_certificate;
    return result;
  }
  if (sol.primal_infeasibility <= 1e-8) {
    result.feasible = true;
    result.point = sol.v;
    return result;
  }
  throw SolverError("feasibility check did not converge");
}

}  // namespace obilc

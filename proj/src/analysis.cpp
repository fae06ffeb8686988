#include "obilc/analysis.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace obilc {

namespace {

Eigen::LLT<Matrix> cholesky_of_preconditioner(const Matrix& W) {
  Eigen::LLT<Matrix> llt(0.5 * (W + W.transpose()));
  if (llt.info() != Eigen::Success) {
    throw NonConvexError("analysis: preconditioner W is not positive definite");
  }
  return llt;
}

/// Extreme eigenvalues of L^-1 sym(S) L^-T for W = LL'.
VertexConstants whitened_extremes(const Matrix& S, const Eigen::LLT<Matrix>& llt) {
  const Matrix sym = 0.5 * (S + S.transpose());
  const auto& L = llt.matrixL();
  Matrix half = L.solve(sym);                // L^-1 sym
  Matrix white = L.solve(half.transpose());  // L^-1 sym L^-T
  white = 0.5 * (white + white.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(white, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw SolverError("analysis: whitened eigensolve failed");
  }
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

double spectral_norm_w_weighted(const Matrix& B, const Matrix& W) {
  // |W^(1/2) B|_2 = sqrt(lambda_max(B' W B)).
  if (B.size() == 0) return 0.0;
  Matrix S = B.transpose() * W * B;
  S = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("analysis: eigensolve failed");
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double matrix_w_norm(const Matrix& A, const Eigen::LLT<Matrix>& llt) {
  // Induced W-norm: |A|_W = sigma_max(L' A L^-T).
  const Matrix L = llt.matrixL();
  const Matrix right = llt.matrixL().solve(A.transpose()).transpose();  // A L^-T
  const Matrix T = L.transpose() * right;
  return T.jacobiSvd().singularValues().maxCoeff();
}

double vector_w_norm(const Vector& v, const Matrix& W) {
  return std::sqrt(std::max(0.0, v.dot(W * v)));
}

}  // namespace

RobustConstants robust_constants(const UncertaintySet& unc, const Matrix& Q, const Matrix& R,
                                 const Matrix& M) {
  const Matrix W = M.transpose() * Q * M + R;
  const auto llt = cholesky_of_preconditioner(W);
  RobustConstants rc;
  rc.mu = kInf;
  rc.L = -kInf;
  rc.per_vertex.reserve(unc.vertices.size());
  for (const auto& vertex : unc.vertices) {
    const Matrix H_i = M.transpose() * Q * vertex.G + R;
    const VertexConstants vc = whitened_extremes(H_i, llt);
    rc.mu = std::min(rc.mu, vc.mu);
    rc.L = std::max(rc.L, vc.L);
    rc.per_vertex.push_back(vc);
  }
  if (!(rc.mu > 0.0)) throw NotStronglyMonotoneError(rc.mu);
  return rc;
}

VertexConstants true_model_constants(const Matrix& G, const Matrix& Q, const Matrix& R,
                                     const Matrix& M) {
  const Matrix W = M.transpose() * Q * M + R;
  const auto llt = cholesky_of_preconditioner(W);
  return whitened_extremes(M.transpose() * Q * G + R, llt);
}

StepWindow step_window(double mu, double L) {
  if (!(mu > 0.0)) throw NotStronglyMonotoneError(mu);
  if (!(L >= mu)) throw Error("step window: L must be at least mu");
  return {0.0, 2.0 * mu / (L * L), mu / (L * L)};
}

ContractionCertificate contraction_certificate(double mu_tilde, double L_tilde, double alpha) {
  if (!(mu_tilde > 0.0)) throw NotStronglyMonotoneError(mu_tilde);
  const double eps = 1.0 - alpha * L_tilde * L_tilde / mu_tilde;
  if (!(eps > -1.0 && eps < 1.0)) {
    throw StepOutOfRangeError("contraction certificate: rate_eps = " + std::to_string(eps) +
                              " is outside (-1, 1); alpha = " + std::to_string(alpha));
  }
  const double ratio = mu_tilde / L_tilde;
  const double eta_sq = 1.0 - ratio * ratio * (1.0 - eps * eps);
  const double eta_sq_direct = 1.0 - 2.0 * alpha * mu_tilde + alpha * alpha * L_tilde * L_tilde;
  if (std::abs(eta_sq - eta_sq_direct) > 1e-12 * std::max(1.0, std::abs(eta_sq))) {
    throw SolverError("contraction certificate: the two eta^2 forms disagree (" +
                      std::to_string(eta_sq) + " vs " + std::to_string(eta_sq_direct) + ")");
  }
  return {eps, std::sqrt(std::max(0.0, eta_sq))};
}

double iss_gain(const Matrix& W, const Matrix& M, const Matrix& Q, double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) {
    throw StepOutOfRangeError("iss gain: eta = " + std::to_string(eta) + " must lie in [0, 1)");
  }
  return spectral_norm_w_weighted(M.transpose() * Q, W) / (1.0 - eta);
}

OffsetBound offset_bound(const Matrix& H_tilde, const Matrix& W, const Matrix& G,
                         const Matrix& M, const Matrix& Q, const Vector& u_star,
                         const Vector& w, const Vector& r, double mu_tilde) {
  const auto llt = cholesky_of_preconditioner(W);
  const Vector residual = G * u_star + w - r;
  const Vector v = (G - M).transpose() * (Q * residual);
  const double v_norm = vector_w_norm(v, W);
  OffsetBound out;
  out.delta = v_norm == 0.0 ? 0.0 : matrix_w_norm(H_tilde, llt) * v_norm;
  out.delta_inverse_mu = v_norm == 0.0 ? 0.0 : v_norm / mu_tilde;
  return out;
}

CostBoundCoeffs cost_bound_coeffs(const Matrix& H, const Matrix& W, const Vector& u_star,
                                  const Vector& f) {
  const auto llt = cholesky_of_preconditioner(W);
  const Vector grad = H * u_star + f;
  CostBoundCoeffs out;
  out.beta1 = llt.matrixL().solve(grad).norm();
  out.beta2 = 0.5 * whitened_extremes(H, llt).L;
  return out;
}

Vector solve_optimum(const Matrix& H, const Vector& f, const TightenedSet& X,
                     QpSettings settings) {
  const Matrix H_sym = 0.5 * (H + H.transpose());
  QpSolution sol = solve(QuadraticProgram(H_sym, f, X.halfspaces()), std::nullopt, settings);
  if (sol.status != QpStatus::optimal) {
    throw SolverError(std::string("solve_optimum: QP finished with status ") +
                      to_string(sol.status));
  }
  return sol.v;
}

FixedPointResult solve_fixed_point(const PolicyConfig& cfg, const Matrix& G, const Vector& w,
                                   double tol, long max_iter) {
  if (G.rows() != cfg.outputs() || G.cols() != cfg.inputs() || w.size() != cfg.outputs()) {
    throw DimensionError("solve_fixed_point: plant dimensions differ from the policy");
  }
  Policy policy(cfg);
  Vector u = policy.project(Vector::Zero(cfg.inputs()));
  FixedPointResult out;
  for (long k = 0; k < max_iter; ++k) {
    const Vector u_next = policy.step(u, G * u + w);
    const double step = vector_w_norm(u_next - u, cfg.W);
    u = u_next;
    if (step <= tol) {
      out.u_bar = u;
      out.iterations = k + 1;
      const Vector reapplied = policy.step(u, G * u + w);
      out.vi_residual = vector_w_norm(reapplied - u, cfg.W);
      return out;
    }
  }
  throw SolverError("solve_fixed_point: no convergence within " + std::to_string(max_iter) +
                    " iterations; the contraction certificate looks violated");
}

CertificateBundle certify(const RobustConstants& rc, const UncertaintySet& unc,
                          const PolicyConfig& cfg, const Matrix& G, const Vector& w) {
  CertificateBundle bundle;
  auto& rep = bundle.report;
  rep.mu = rc.mu;
  rep.L = rc.L;
  rep.per_vertex = rc.per_vertex;

  const StepWindow window = step_window(rc.mu, rc.L);
  rep.alpha_window_hi = window.hi;
  rep.alpha_default = window.alpha_default;
  rep.alpha = cfg.alpha;

  const VertexConstants tm = true_model_constants(G, cfg.Q, cfg.R, cfg.M);
  rep.mu_tilde = tm.mu;
  rep.L_tilde = tm.L;
  if (!(tm.mu > 0.0)) throw NotStronglyMonotoneError(tm.mu);
  rep.alpha_star = tm.mu / (tm.L * tm.L);

  // An explicitly overridden step outside even the true-model window has no
  // contraction certificate; the rate-dependent quantities degrade to NaN and
  // the fixed-point oracle is skipped (the iteration need not converge).
  bool certified_step = true;
  try {
    const ContractionCertificate cc = contraction_certificate(tm.mu, tm.L, cfg.alpha);
    rep.rate_eps = cc.rate_eps;
    rep.eta = cc.eta;
    rep.gamma = iss_gain(cfg.W, cfg.M, cfg.Q, cc.eta);
  } catch (const StepOutOfRangeError&) {
    if (!cfg.alpha_overridden) throw;
    certified_step = false;
    rep.rate_eps = std::numeric_limits<double>::quiet_NaN();
    rep.eta = std::numeric_limits<double>::quiet_NaN();
    rep.gamma = std::numeric_limits<double>::quiet_NaN();
  }

  const Matrix H = G.transpose() * cfg.Q * G + cfg.R;
  const Vector f = G.transpose() * (cfg.Q * (w - cfg.r));

  QpSettings oracle_settings = cfg.qp_settings;
  oracle_settings.kkt_tol = std::min(oracle_settings.kkt_tol, 1e-9);
  {
    QpSolution sol = solve(QuadraticProgram(0.5 * (H + H.transpose()), f, cfg.X->halfspaces()),
                           std::nullopt, oracle_settings);
    if (sol.status != QpStatus::optimal) {
      throw SolverError(std::string("certify: optimum QP finished with status ") +
                        to_string(sol.status));
    }
    bundle.oracle.u_star = sol.v;
    bundle.oracle.u_star_kkt_residual =
        std::max({sol.stationarity, sol.primal_infeasibility, sol.complementarity});
  }

  if (certified_step) {
    PolicyConfig cfg_oracle = cfg;
    cfg_oracle.qp_settings = oracle_settings;
    const FixedPointResult fp = solve_fixed_point(cfg_oracle, G, w, 1e-12);
    bundle.oracle.u_bar = fp.u_bar;
    bundle.oracle.u_bar_vi_residual = fp.vi_residual;
    bundle.oracle.u_bar_iterations = fp.iterations;
  }

  const Matrix H_tilde = cfg.M.transpose() * cfg.Q * G + cfg.R;
  const OffsetBound ob =
      offset_bound(H_tilde, cfg.W, G, cfg.M, cfg.Q, bundle.oracle.u_star, w, cfg.r, tm.mu);
  rep.delta = ob.delta;
  rep.delta_inverse_mu = ob.delta_inverse_mu;

  const CostBoundCoeffs cb = cost_bound_coeffs(H, cfg.W, bundle.oracle.u_star, f);
  rep.beta1 = cb.beta1;
  rep.beta2 = cb.beta2;

  rep.ubar_ustar_distance =
      bundle.oracle.u_bar.size() == bundle.oracle.u_star.size() && certified_step
          ? vector_w_norm(bundle.oracle.u_bar - bundle.oracle.u_star, cfg.W)
          : std::numeric_limits<double>::quiet_NaN();
  return bundle;
}

}  // namespace obilc

#pragma once

#include <vector>

#include "obilc/policy.hpp"
#include "obilc/qp.hpp"
#include "obilc/uncertainty.hpp"

namespace obilc {

/// Extreme eigenvalues of the symmetrized, W-whitened iteration matrix for
/// one vertex model.
struct VertexConstants {
  double mu = 0.0;
  double L = 0.0;
};

struct RobustConstants {
  double mu = 0.0;
  double L = 0.0;
  std::vector<VertexConstants> per_vertex;
};

/// Per vertex i: H_i = M'QG_i + R, and (mu_i, L_i) are the extreme eigenvalues
/// of the pencil (sym(H_i), W) with W = M'QM + R. Computed by triangular
/// whitening: W = LL', eigensolve of L^-1 sym(H_i) L^-T. Throws
/// NotStronglyMonotoneError when min_i mu_i <= 0.
RobustConstants robust_constants(const UncertaintySet& unc, const Matrix& Q, const Matrix& R,
                                 const Matrix& M);

/// Same spectral bounds for the true model: H = M'QG + R. Simulator-side only.
VertexConstants true_model_constants(const Matrix& G, const Matrix& Q, const Matrix& R,
                                     const Matrix& M);

/// Open admissible interval (0, 2 mu / L^2) and the robust default mu / L^2.
struct StepWindow {
  double lo = 0.0;
  double hi = 0.0;
  double alpha_default = 0.0;
};
StepWindow step_window(double mu, double L);

/// rate_eps = 1 - alpha L^2 / mu and the contraction factor
/// eta = sqrt(1 - (mu/L)^2 (1 - rate_eps^2)); the two algebraic forms of
/// eta^2 are cross-checked to 1e-12. Throws StepOutOfRangeError when
/// rate_eps leaves (-1, 1).
struct ContractionCertificate {
  double rate_eps = 0.0;
  double eta = 0.0;
};
ContractionCertificate contraction_certificate(double mu_tilde, double L_tilde, double alpha);

/// gamma = |W^(1/2) M'Q|_2 / (1 - eta). Requires eta in [0, 1).
double iss_gain(const Matrix& W, const Matrix& M, const Matrix& Q, double eta);

/// Fixed-point offset bound of the stated form, plus the variant using
/// 1/mu_tilde in place of |H_tilde|_W. Both are reported; neither is silently
/// preferred.
struct OffsetBound {
  double delta = 0.0;             ///< |H_tilde|_W * |(G-M)'Q(Gu* + w - r)|_W
  double delta_inverse_mu = 0.0;  ///< (1/mu_tilde) * same vector norm
};
OffsetBound offset_bound(const Matrix& H_tilde, const Matrix& W, const Matrix& G,
                         const Matrix& M, const Matrix& Q, const Vector& u_star,
                         const Vector& w, const Vector& r, double mu_tilde);

/// beta1 = |W^(-1/2)(H u* + f)|, beta2 = L_bar/2 with L_bar the top eigenvalue
/// of the pencil (H, W).
struct CostBoundCoeffs {
  double beta1 = 0.0;
  double beta2 = 0.0;
};
CostBoundCoeffs cost_bound_coeffs(const Matrix& H, const Matrix& W, const Vector& u_star,
                                  const Vector& f);

/// KKT-verified minimizer of 1/2 u'Hu + f'u over the tightened set.
Vector solve_optimum(const Matrix& H, const Vector& f, const TightenedSet& X,
                     QpSettings settings = {});

/// Noiseless fixed point of the policy, found by iterating
/// u <- T(u, Gu + w) until the W-norm step drops below tol. The iteration is
/// geometric under the certificates, so non-convergence within max_iter is a
/// certificate violation and throws SolverError.
struct FixedPointResult {
  Vector u_bar;
  double vi_residual = 0.0;  ///< |u - Pi_X^W(u - alpha W^-1 F(u))|_W at u_bar
  long iterations = 0;
};
FixedPointResult solve_fixed_point(const PolicyConfig& cfg, const Matrix& G, const Vector& w,
                                   double tol = 1e-10, long max_iter = 1000000);

/// Every constant the iteration-domain analysis provides, in one record.
struct CertificateReport {
  double mu = 0.0;
  double L = 0.0;
  std::vector<VertexConstants> per_vertex;
  double mu_tilde = 0.0;
  double L_tilde = 0.0;
  double alpha = 0.0;
  double alpha_window_hi = 0.0;  ///< window is the open interval (0, hi)
  double alpha_default = 0.0;    ///< robust default mu/L^2
  double alpha_star = 0.0;       ///< rate-optimal mu_tilde/L_tilde^2 (simulator-side)
  double rate_eps = 0.0;
  double eta = 0.0;
  double gamma = 0.0;
  double delta = 0.0;
  double delta_inverse_mu = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double ubar_ustar_distance = 0.0;  ///< empirical |u_bar - u*|_W
};

struct OraclePoints {
  Vector u_star;
  Vector u_bar;
  double u_star_kkt_residual = 0.0;
  double u_bar_vi_residual = 0.0;
  long u_bar_iterations = 0;
};

struct CertificateBundle {
  CertificateReport report;
  OraclePoints oracle;
};

/// Full certificate computation for a configured policy against the true
/// plant (G, w): robust and true-model constants, rate, ISS gain, offset and
/// cost-bound coefficients, and the oracle points u* and u_bar.
CertificateBundle certify(const RobustConstants& rc, const UncertaintySet& unc,
                          const PolicyConfig& cfg, const Matrix& G, const Vector& w);

}  // namespace obilc

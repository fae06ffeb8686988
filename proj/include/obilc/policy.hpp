#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "obilc/lifted.hpp"
#include "obilc/qp.hpp"
#include "obilc/uncertainty.hpp"

namespace obilc {

/// Everything the learning update needs: weights, reference, model,
/// preconditioner, step length, tightened feasible set, and stop rule.
///
/// stop_eps is the cost-plateau stopping tolerance of the outer loop; it is
/// unrelated to the step-size deviation rate_eps reported by the certificates.
struct PolicyConfig {
  Matrix Q;
  Matrix R;
  Vector r;
  Matrix M;
  Matrix W;  ///< M'QM + R, formed and SPD-checked at construction
  double alpha = 0.0;
  std::shared_ptr<const TightenedSet> X;
  double stop_eps = 1e-8;
  long k_max = 200;

  /// Admissible window (0, 2*mu/L^2) when the certificates are available.
  std::optional<std::pair<double, double>> alpha_window;
  bool alpha_overridden = false;      ///< user supplied alpha explicitly
  std::string alpha_warning;          ///< set when alpha lies outside the window

  QpSettings qp_settings;

  PolicyConfig(Matrix Q_in, Matrix R_in, Vector r_in, Matrix M_in, double alpha_in,
               std::shared_ptr<const TightenedSet> X_in);

  Eigen::Index inputs() const { return M.cols(); }
  Eigen::Index outputs() const { return M.rows(); }

  /// Throws StepOutOfRangeError if alpha is outside the window and the user
  /// did not explicitly override; otherwise records a warning string.
  void check_alpha();
};

/// F(u, y) = M'Q(y - r) + Ru, the measured-output gradient surrogate.
Vector gradient_surrogate(const Vector& u, const Vector& y, const PolicyConfig& cfg);

/// 1/2|y - r|_Q^2 + 1/2|u|_R^2 with the measured output.
double surrogate_cost(const Vector& u, const Vector& y, const PolicyConfig& cfg);

/// The learning update as a stateful object so the projection QP is
/// factorized once and warm-started across iterations.
class Policy {
 public:
  explicit Policy(const PolicyConfig& cfg);

  /// Projection onto the tightened set in the W metric.
  Vector project(const Vector& u);

  /// T(u, y): one forward-backward step realized as a convex program.
  Vector step(const Vector& u, const Vector& y);

  const PolicyConfig& config() const { return cfg_; }

 private:
  Vector solve_program(const Vector& q);

  PolicyConfig cfg_;
  DenseQpSolver solver_;
  Vector b_;
  Vector warm_v_;
  Vector warm_lambda_;
  bool has_warm_ = false;
};

/// Stateless form; builds a fresh solver per call.
Vector policy_step(const Vector& u, const Vector& y, const PolicyConfig& cfg);

enum class RunStatus { converged, k_max_reached, error };

const char* to_string(RunStatus status);

struct IterationRecord {
  long k = 0;
  Vector u;
  Vector y;
  Vector d;
  double surrogate_cost = 0.0;
  double true_cost = 0.0;     ///< phi(u_k) from the simulator-side model; NaN if unavailable
  double dist_to_ubar = 0.0;  ///< |u_k - u_bar|_W; NaN if unavailable
  double dist_to_ustar = 0.0;
  double max_violation = 0.0;  ///< worst constraint violation of (u_k, y_k)
};

struct IterationTrace {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::error;
  std::string error_message;

  long iterations() const { return static_cast<long>(records.size()) - 1; }
};

/// Simulator-side reference data used to annotate a trace. All fields are
/// optional; absent quantities are logged as NaN.
struct TraceOracle {
  std::optional<Vector> u_bar;
  std::optional<Vector> u_star;
  std::optional<Matrix> H;  ///< true G'QG + R for phi
  std::optional<Vector> f;  ///< true G'Q(w - r)
};

/// Measure-then-update loop against the plant. The initial input is projected
/// onto the tightened set first; the loop stops when the surrogate cost
/// plateaus within stop_eps or the iteration cap is reached (a simultaneous
/// tie resolves to converged).
IterationTrace run_ilc(const LiftedSystem& plant, const DisturbanceModel& disturbance,
                       const PolicyConfig& cfg, const Vector& u0,
                       const TraceOracle& oracle = {});

}  // namespace obilc

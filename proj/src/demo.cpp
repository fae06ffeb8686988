#include "obilc/demo.hpp"

namespace obilc {

namespace {

double scurve_position(double tau) { return tau * tau * (3.0 - 2.0 * tau); }
double scurve_velocity(double tau, double total_time) {
  return 6.0 * tau * (1.0 - tau) / total_time;
}

}  // namespace

DemoPlant make_demo_plant() {
  DemoPlant demo;
  const long T = DemoPlant::kHorizon;
  const double dt = DemoPlant::kDt;
  const double kp = DemoPlant::kProportionalGain;
  const double kd = DemoPlant::kDerivativeGain;
  const double total_time = dt * static_cast<double>(T);

  // Double integrator with state (p, v); the feedback u_fb = kp (p_ref - p)
  // + kd (v_ref - v) adds to the learned feedforward. The reference drive is
  // folded into a constant-1 augmented state so the realization stays in the
  // x(i+1) = A(i)x(i) + B(i)u(i) form.
  Matrix A_ol(2, 2);
  A_ol << 1.0, dt, 0.0, 1.0;
  Vector B_ol(2);
  B_ol << 0.5 * dt * dt, dt;

  Matrix A_cl = A_ol;
  A_cl.col(0) -= kp * B_ol;
  A_cl.col(1) -= kd * B_ol;

  demo.ltv.A.reserve(static_cast<size_t>(T));
  demo.ltv.B.reserve(static_cast<size_t>(T));
  demo.ltv.C.reserve(static_cast<size_t>(T + 1));
  demo.ltv.c.reserve(static_cast<size_t>(T + 1));
  for (long i = 0; i < T; ++i) {
    const double tau = static_cast<double>(i) / static_cast<double>(T);
    const double drive = kp * scurve_position(tau) + kd * scurve_velocity(tau, total_time);
    Matrix Ai = Matrix::Zero(3, 3);
    Ai.topLeftCorner(2, 2) = A_cl;
    Ai.block(0, 2, 2, 1) = B_ol * drive;
    Ai(2, 2) = 1.0;
    demo.ltv.A.push_back(std::move(Ai));

    Matrix Bi = Matrix::Zero(3, 1);
    Bi.topRows(2) = B_ol;
    demo.ltv.B.push_back(std::move(Bi));
  }
  for (long i = 0; i <= T; ++i) {
    Matrix Ci = Matrix::Zero(2, 3);
    Ci(0, 0) = 1.0;
    Ci(1, 1) = 1.0;
    demo.ltv.C.push_back(std::move(Ci));
    demo.ltv.c.push_back(Vector::Zero(2));
  }
  demo.ltv.x0 = Vector::Zero(3);
  demo.ltv.x0[2] = 1.0;

  demo.sys = build_lifted(demo.ltv);
  const Eigen::Index n = demo.sys.inputs();
  const Eigen::Index m = demo.sys.outputs();

  // Four-vertex hull around the true map: a gain spread plus a dynamics
  // spread toward a detuned tracking loop (lower gains, slower transients).
  // The pairs are symmetric, so the uniform blend reproduces (G, w) exactly.
  LtvRealization detuned = demo.ltv;
  {
    Matrix A_slow = A_ol;
    A_slow.col(0) -= DemoPlant::kDetunedProportionalGain * B_ol;
    A_slow.col(1) -= DemoPlant::kDetunedDerivativeGain * B_ol;
    for (long i = 0; i < T; ++i) {
      detuned.A[static_cast<size_t>(i)].topLeftCorner(2, 2) = A_slow;
    }
  }
  const Matrix G_detuned = build_lifted(detuned).G;
  const Matrix delta_gain = DemoPlant::kGainSpread * demo.sys.G;
  const Matrix delta_dyn = DemoPlant::kDynamicsSpread * (G_detuned - demo.sys.G);

  std::vector<UncertaintyVertex> vertices;
  vertices.push_back({demo.sys.G + delta_gain, demo.sys.w});
  vertices.push_back({demo.sys.G - delta_gain, demo.sys.w});
  vertices.push_back({demo.sys.G + delta_dyn, demo.sys.w});
  vertices.push_back({demo.sys.G - delta_dyn, demo.sys.w});
  demo.uncertainty = UncertaintySet(std::move(vertices), Vector::Constant(4, 0.25));

  demo.U = Box::unbounded(n);

  Vector y_lo = Vector::Constant(m, -kInf);
  Vector y_hi = Vector::Constant(m, kInf);
  for (Eigen::Index i = 0; i < m / 2; ++i) {
    y_lo[2 * i + 1] = -DemoPlant::kVelocityLimit;
    y_hi[2 * i + 1] = DemoPlant::kVelocityLimit;
  }
  demo.Y = Box(std::move(y_lo), std::move(y_hi));

  Vector d_half(m);
  for (Eigen::Index i = 0; i < m / 2; ++i) {
    d_half[2 * i] = DemoPlant::kPositionNoise;
    d_half[2 * i + 1] = DemoPlant::kVelocityNoise;
  }
  demo.D = Box(-d_half, d_half);

  Vector q_diag(m);
  for (Eigen::Index i = 0; i < m / 2; ++i) {
    q_diag[2 * i] = DemoPlant::kPositionWeight;
    q_diag[2 * i + 1] = 0.0;
  }
  demo.Q = q_diag.asDiagonal();
  demo.R = DemoPlant::kInputWeight * Matrix::Identity(n, n);

  demo.r = Vector::Zero(m);
  for (long i = 0; i <= T; ++i) {
    const double tau = static_cast<double>(i) / static_cast<double>(T);
    demo.r[2 * i] = scurve_position(tau);
    demo.r[2 * i + 1] = scurve_velocity(tau, total_time);
  }
  return demo;
}

}  // namespace obilc

#pragma once

// Test-only reference implementations, kept independent of the library code
// paths they check.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "obilc/lifted.hpp"

namespace obilc::testing {

/// Deterministic, platform-independent uniform source for tests.
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  std::uint64_t next() {
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  Eigen::VectorXd vector(Eigen::Index n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }

 private:
  std::uint64_t state_;
};

/// Step-by-step simulation of the time-varying recursion; the brute-force
/// oracle for the lifted map.
inline Eigen::VectorXd simulate_ltv(const obilc::LtvRealization& ltv, const Eigen::VectorXd& u) {
  const Eigen::Index T = ltv.horizon();
  const Eigen::Index p = ltv.input_dim();
  const Eigen::Index q = ltv.output_dim();
  Eigen::VectorXd y(q * (T + 1));
  Eigen::VectorXd x = ltv.x0;
  for (Eigen::Index i = 0; i <= T; ++i) {
    y.segment(i * q, q) = ltv.C[static_cast<size_t>(i)] * x + ltv.c[static_cast<size_t>(i)];
    if (i < T) {
      x = ltv.A[static_cast<size_t>(i)] * x +
          ltv.B[static_cast<size_t>(i)] * u.segment(i * p, p);
    }
  }
  return y;
}

/// Exhaustive active-set enumeration for min 1/2 v'Pv + q'v s.t. Av <= b.
/// Solves the equality-constrained KKT system for every subset of rows and
/// keeps the candidate that is primal feasible with nonnegative multipliers.
/// Strict convexity makes any such candidate the unique global optimum.
inline std::optional<Eigen::VectorXd> active_set_oracle(const Eigen::MatrixXd& P,
                                                        const Eigen::VectorXd& q,
                                                        const Eigen::MatrixXd& A,
                                                        const Eigen::VectorXd& b,
                                                        double tol = 1e-9) {
  const Eigen::Index n = P.rows();
  const Eigen::Index h = A.rows();
  for (std::uint64_t mask = 0; mask < (1ULL << h); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < h; ++i) {
      if (mask & (1ULL << i)) act.push_back(i);
    }
    const Eigen::Index na = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd K(n + na, n + na);
    K.setZero();
    K.topLeftCorner(n, n) = P;
    Eigen::VectorXd rhs(n + na);
    rhs.head(n) = -q;
    for (Eigen::Index j = 0; j < na; ++j) {
      K.block(0, n + j, n, 1) = A.row(act[static_cast<size_t>(j)]).transpose();
      K.block(n + j, 0, 1, n) = A.row(act[static_cast<size_t>(j)]);
      rhs[n + j] = b[act[static_cast<size_t>(j)]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd v = sol.head(n);
    const Eigen::VectorXd lam = sol.tail(na);
    if (na > 0 && lam.minCoeff() < -tol) continue;
    if (h > 0 && (A * v - b).maxCoeff() > tol) continue;
    return v;
  }
  return std::nullopt;
}

}  // namespace obilc::testing

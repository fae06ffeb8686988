#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "obilc/qp.hpp"
#include "support/oracles.hpp"

using namespace obilc;
using testing::TestRng;

namespace {

void check_kkt(const QpSolution& sol, const Matrix& P, const Vector& q, const Matrix& A,
               const Vector& b) {
  REQUIRE(sol.status == QpStatus::optimal);
  const double tol = 1e-8 * (1.0 + q.lpNorm<Eigen::Infinity>());
  Vector grad = P * sol.v + q;
  if (A.rows() > 0) grad += A.transpose() * sol.lambda;
  CHECK(grad.lpNorm<Eigen::Infinity>() <= tol);
  if (A.rows() > 0) {
    CHECK((A * sol.v - b).maxCoeff() <= tol);
    CHECK(std::abs(sol.lambda.dot(A * sol.v - b)) <= tol);
    CHECK(sol.lambda.minCoeff() >= -1e-10);
  }
}

struct RandomQp {
  Matrix P;
  Vector q;
  Matrix A;
  Vector b;
};

RandomQp random_qp(TestRng& rng, Eigen::Index n, Eigen::Index h) {
  RandomQp qp;
  const Matrix root = rng.matrix(n, n, -1.0, 1.0);
  qp.P = root * root.transpose() + 0.2 * Matrix::Identity(n, n);
  qp.q = rng.vector(n, -2.0, 2.0);
  qp.A = rng.matrix(h, n, -1.0, 1.0);
  for (Eigen::Index i = 0; i < h; ++i) {
    if (qp.A.row(i).lpNorm<Eigen::Infinity>() < 0.1) qp.A(i, 0) += 0.5;
  }
  // Keep a point feasible so the instance is solvable.
  const Vector interior = rng.vector(n, -0.5, 0.5);
  qp.b = qp.A * interior + rng.vector(h, 0.05, 1.0);
  return qp;
}

}  // namespace

TEST_CASE("unconstrained minimum") {
  QuadraticProgram qp(Matrix::Identity(2, 2), Vector::Zero(2),
                      HalfspaceSystem::empty_system(2));
  const QpSolution sol = solve(qp);
  REQUIRE(sol.status == QpStatus::optimal);
  CHECK(sol.v.lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("clamped coordinate with hand-checked multiplier") {
  Vector q(2);
  q << -2.0, 0.0;
  Matrix A(1, 2);
  A << 1.0, 0.0;
  Vector b = Vector::Zero(1);
  QuadraticProgram qp(Matrix::Identity(2, 2), q, HalfspaceSystem(A, b));
  const QpSolution sol = solve(qp);
  REQUIRE(sol.status == QpStatus::optimal);
  CHECK(sol.v.lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(sol.lambda[0] == doctest::Approx(2.0).epsilon(1e-8));
  check_kkt(sol, qp.P, qp.q, A, b);
}

TEST_CASE("construction rejects asymmetric or indefinite cost matrices") {
  Matrix bad_sym(2, 2);
  bad_sym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(
      QuadraticProgram(bad_sym, Vector::Zero(2), HalfspaceSystem::empty_system(2)),
      NonConvexError);
  Matrix indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -0.1;
  CHECK_THROWS_AS(
      QuadraticProgram(indefinite, Vector::Zero(2), HalfspaceSystem::empty_system(2)),
      NonConvexError);
}

TEST_CASE("random instances match exhaustive active-set enumeration") {
  TestRng rng(2718);
  int solved = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const Eigen::Index n = rng.uniform_int(1, 5);
    const Eigen::Index h = rng.uniform_int(0, 6);
    const RandomQp inst = random_qp(rng, n, h);
    const auto oracle = testing::active_set_oracle(inst.P, inst.q, inst.A, inst.b);
    REQUIRE(oracle.has_value());

    QuadraticProgram qp(inst.P, inst.q, HalfspaceSystem(inst.A, inst.b));
    const QpSolution sol = solve(qp);
    REQUIRE(sol.status == QpStatus::optimal);
    check_kkt(sol, inst.P, inst.q, inst.A, inst.b);
    CHECK((sol.v - *oracle).lpNorm<Eigen::Infinity>() < 1e-7);
    ++solved;
  }
  CHECK(solved == 120);
}

TEST_CASE("warm and cold starts agree") {
  TestRng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomQp inst = random_qp(rng, 4, 5);
    QuadraticProgram qp(inst.P, inst.q, HalfspaceSystem(inst.A, inst.b));
    const QpSolution cold = solve(qp);
    const Vector v_guess = rng.vector(4, -1.0, 1.0);
    const Vector l_guess = rng.vector(5, 0.0, 1.0);
    const QpSolution warm = solve(qp, std::make_pair(v_guess, l_guess));
    REQUIRE(cold.status == QpStatus::optimal);
    REQUIRE(warm.status == QpStatus::optimal);
    CHECK((cold.v - warm.v).lpNorm<Eigen::Infinity>() < 1e-7);
  }
}

TEST_CASE("solution invariant under positive row scaling") {
  TestRng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomQp inst = random_qp(rng, 3, 5);
    QuadraticProgram qp(inst.P, inst.q, HalfspaceSystem(inst.A, inst.b));
    const QpSolution base = solve(qp);

    Matrix A_scaled = inst.A;
    Vector b_scaled = inst.b;
    for (Eigen::Index i = 0; i < 5; ++i) {
      const double s = rng.uniform(0.01, 100.0);
      A_scaled.row(i) *= s;
      b_scaled[i] *= s;
    }
    QuadraticProgram qp2(inst.P, inst.q, HalfspaceSystem(A_scaled, b_scaled));
    const QpSolution scaled = solve(qp2);
    REQUIRE(base.status == QpStatus::optimal);
    REQUIRE(scaled.status == QpStatus::optimal);
    CHECK((base.v - scaled.v).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("weighted projection: idempotence and box clamp") {
  TestRng rng(31);
  const Box box = Box::centered(1.0, 3);
  const HalfspaceSystem rows = box.halfspaces();
  const Matrix W = Matrix::Identity(3, 3);

  Vector inside(3);
  inside << 0.3, -0.7, 0.0;
  CHECK((weighted_projection(inside, W, rows) - inside).lpNorm<Eigen::Infinity>() < 1e-9);

  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = rng.vector(3, -3.0, 3.0);
    const Vector proj = weighted_projection(x, W, rows);
    const Vector clamp = x.cwiseMax(-1.0).cwiseMin(1.0);
    CHECK((proj - clamp).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("anisotropic weighting steers the projection, against the oracle") {
  Matrix W(2, 2);
  W << 1.0, 0.0, 0.0, 100.0;
  Matrix A(1, 2);
  A << 1.0, 1.0;
  Vector b = Vector::Zero(1);
  Vector x(2);
  x << 1.0, 1.0;
  const Vector proj = weighted_projection(x, W, HalfspaceSystem(A, b));
  // Oracle: min |v - x|_W^2 over the half-space.
  const auto oracle = testing::active_set_oracle(W, -(W * x), A, b);
  REQUIRE(oracle.has_value());
  CHECK((proj - *oracle).lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(proj[1] > 0.8);  // the heavy coordinate barely moves
}

TEST_CASE("projection is firmly non-expansive in the W norm") {
  TestRng rng(77);
  const Matrix root = rng.matrix(3, 3, -1.0, 1.0);
  const Matrix W = root * root.transpose() + 0.3 * Matrix::Identity(3, 3);
  const RandomQp inst = random_qp(rng, 3, 4);
  const HalfspaceSystem rows(inst.A, inst.b);
  for (int trial = 0; trial < 15; ++trial) {
    const Vector x = rng.vector(3, -2.0, 2.0);
    const Vector y = rng.vector(3, -2.0, 2.0);
    const Vector px = weighted_projection(x, W, rows);
    const Vector py = weighted_projection(y, W, rows);
    const Vector dp = px - py;
    const double lhs = dp.dot(W * dp);
    const double rhs = dp.dot(W * (x - y));
    CHECK(lhs <= rhs + 1e-8);
  }
}

TEST_CASE("feasibility check: trivial, infeasible, and random feasible") {
  {
    Matrix A(2, 1);
    A << 1.0, -1.0;
    Vector b(2);
    b << 1.0, 0.0;
    const auto res = feasibility_check(HalfspaceSystem(A, b));
    REQUIRE(res.feasible);
    CHECK(res.point[0] >= -1e-8);
    CHECK(res.point[0] <= 1.0 + 1e-8);
  }
  {
    Matrix A(2, 1);
    A << 1.0, -1.0;
    Vector b(2);
    b << -1.0, 0.0;  // x <= -1 and x >= 0
    const auto res = feasibility_check(HalfspaceSystem(A, b));
    REQUIRE_FALSE(res.feasible);
    REQUIRE(res.certificate.size() == 2);
    CHECK(res.certificate.minCoeff() >= 0.0);
    CHECK(std::abs(res.certificate.dot(A.col(0))) <= 1e-6);
    CHECK(res.certificate.dot(b) < 0.0);
  }
  TestRng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = rng.uniform_int(1, 4);
    const Eigen::Index h = rng.uniform_int(1, 8);
    const RandomQp inst = random_qp(rng, n, h);
    const auto res = feasibility_check(HalfspaceSystem(inst.A, inst.b));
    REQUIRE(res.feasible);
    CHECK((inst.A * res.point - inst.b).maxCoeff() <= 1e-8);
  }
}

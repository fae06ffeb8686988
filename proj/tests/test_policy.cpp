#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "obilc/analysis.hpp"
#include "obilc/demo.hpp"
#include "obilc/policy.hpp"
#include "support/instance_family.hpp"
#include "support/oracles.hpp"

using namespace obilc;
using testing::InstanceOptions;
using testing::make_random_instance;
using testing::TestRng;

namespace {

std::shared_ptr<const TightenedSet> unconstrained_set(Eigen::Index n) {
  std::vector<UncertaintyVertex> verts{{Matrix::Identity(n, n), Vector::Zero(n)}};
  UncertaintySet unc(verts, Vector::Ones(1));
  return std::make_shared<const TightenedSet>(ConvexSet(Box::unbounded(n)),
                                              ConvexSet(Box::unbounded(n)), Box::zero(n), unc);
}

PolicyConfig scalar_config(double alpha) {
  PolicyConfig cfg(Matrix::Identity(1, 1), 0.01 * Matrix::Identity(1, 1),
                   Vector::Ones(1), Matrix::Identity(1, 1), alpha, unconstrained_set(1));
  cfg.stop_eps = 1e-14;
  cfg.k_max = 500;
  return cfg;
}

double w_norm(const Vector& v, const Matrix& W) { return std::sqrt(v.dot(W * v)); }

}  // namespace

TEST_CASE("gradient surrogate: fixed points and hand values") {
  {
    PolicyConfig cfg(Matrix::Identity(2, 2), Matrix::Zero(2, 2), Vector::Ones(2),
                     Matrix::Identity(2, 2), 1.0, unconstrained_set(2));
    const Vector g = gradient_surrogate(Vector::Constant(2, 3.0), Vector::Ones(2), cfg);
    CHECK(g.lpNorm<Eigen::Infinity>() == 0.0);  // y = r and no input weight
  }
  {
    PolicyConfig cfg(Matrix::Identity(2, 2), Matrix::Identity(2, 2), Vector::Zero(2),
                     Matrix::Identity(2, 2), 1.0, unconstrained_set(2));
    Vector y(2), u(2), expected(2);
    y << 1.0, 0.0;
    u << 0.0, 1.0;
    expected << 1.0, 1.0;
    CHECK((gradient_surrogate(u, y, cfg) - expected).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("gradient surrogate matches the affine form on noiseless outputs") {
  TestRng rng(21);
  for (int trial = 0; trial < 15; ++trial) {
    const auto inst = make_random_instance(rng);
    PolicyConfig cfg = inst.make_config();
    const Vector u = rng.vector(inst.plant.inputs(), -1.0, 1.0);
    const Vector y = inst.plant.G * u + inst.plant.w;

    const Matrix H_tilde = cfg.R + cfg.M.transpose() * cfg.Q * inst.plant.G;
    const Vector f_tilde = cfg.M.transpose() * (cfg.Q * (inst.plant.w - cfg.r));
    const Vector direct = gradient_surrogate(u, y, cfg);
    const Vector affine = H_tilde * u + f_tilde;
    CHECK((direct - affine).lpNorm<Eigen::Infinity>() <
          1e-12 * (1.0 + affine.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("surrogate cost: values and the constant offset to the true cost") {
  PolicyConfig cfg(Matrix::Identity(2, 2), Matrix::Identity(2, 2), Vector::Zero(2),
                   Matrix::Identity(2, 2), 1.0, unconstrained_set(2));
  CHECK(surrogate_cost(Vector::Zero(2), Vector::Zero(2), cfg) == 0.0);
  Vector y(2), u(2);
  y << 1.0, 1.0;
  u << 1.0, 0.0;
  CHECK(surrogate_cost(u, y, cfg) == doctest::Approx(1.5).epsilon(1e-15));

  TestRng rng(5);
  const auto inst = make_random_instance(rng);
  PolicyConfig rcfg = inst.make_config();
  const Matrix H = inst.plant.G.transpose() * rcfg.Q * inst.plant.G + rcfg.R;
  const Vector f = inst.plant.G.transpose() * (rcfg.Q * (inst.plant.w - rcfg.r));
  double offset = std::numeric_limits<double>::quiet_NaN();
  for (int s = 0; s < 10; ++s) {
    const Vector v = rng.vector(inst.plant.inputs(), -1.0, 1.0);
    const Vector y_clean = inst.plant.G * v + inst.plant.w;
    const double phi = 0.5 * v.dot(H * v) + f.dot(v);
    const double gap = surrogate_cost(v, y_clean, rcfg) - phi;
    if (std::isnan(offset)) {
      offset = gap;
    } else {
      CHECK(gap == doctest::Approx(offset).epsilon(1e-9));
    }
  }
}

TEST_CASE("scalar closed form: iteration reaches 1/1.01") {
  const LiftedSystem plant(Matrix::Identity(1, 1), Vector::Zero(1));
  PolicyConfig cfg = scalar_config(1.0);
  const IterationTrace trace =
      run_ilc(plant, DisturbanceModel::zero(1), cfg, Vector::Zero(1));
  REQUIRE(trace.status == RunStatus::converged);
  const double expected = 1.0 / 1.01;
  CHECK(trace.records.back().u[0] == doctest::Approx(expected).epsilon(1e-10));

  // The fixed point reproduces itself through one more policy step.
  Policy policy(cfg);
  const Vector u_bar = trace.records.back().u;
  const Vector y_bar = plant.G * u_bar + plant.w;
  CHECK((policy.step(u_bar, y_bar) - u_bar).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("a vanishing step length leaves feasible inputs in place") {
  TestRng rng(17);
  const auto inst = make_random_instance(rng);
  PolicyConfig cfg = inst.make_config();
  cfg.alpha = 1e-12;
  Policy policy(cfg);
  const Vector u = policy.project(Vector::Zero(inst.plant.inputs()));
  const Vector y = inst.plant.G * u + inst.plant.w;
  CHECK((policy.step(u, y) - u).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("k_max = 0 yields only the projected start and its measurement") {
  TestRng rng(3);
  const auto inst = make_random_instance(rng);
  PolicyConfig cfg = inst.make_config(/*stop_eps=*/0.0, /*k_max=*/0);
  const IterationTrace trace =
      run_ilc(inst.plant, DisturbanceModel(inst.D, std::uint64_t{7}), cfg, Vector());
  REQUIRE(trace.status == RunStatus::k_max_reached);
  REQUIRE(trace.records.size() == 1);
  CHECK(trace.records[0].k == 0);
  CHECK(inst.X->contains(trace.records[0].u, 1e-7));
}

TEST_CASE("exact model, no noise: geometric convergence to the optimum") {
  TestRng rng(101);
  InstanceOptions opt;
  opt.exact_model = true;
  for (int trial = 0; trial < 5; ++trial) {
    const auto inst = make_random_instance(rng, opt);
    PolicyConfig cfg = inst.make_config(/*stop_eps=*/0.0, /*k_max=*/60);
    const auto bundle = certify(inst.constants, inst.uncertainty, cfg, inst.plant.G,
                                inst.plant.w);

    TraceOracle oracle;
    oracle.u_bar = bundle.oracle.u_bar;
    oracle.u_star = bundle.oracle.u_star;
    const IterationTrace trace = run_ilc(inst.plant, DisturbanceModel::zero(inst.plant.outputs()),
                                         cfg, inst.u0_far, oracle);
    // With M = G and one vertex, eta = 0 and the loop collapses in one step.
    REQUIRE(trace.records.size() >= 3);

    // With M = G the fixed point and the optimum coincide.
    CHECK(bundle.report.ubar_ustar_distance < 1e-7);

    const double eta = bundle.report.eta;
    const double floor = 1e-5 * (1.0 + trace.records.front().dist_to_ubar);
    for (size_t k = 0; k + 1 < trace.records.size(); ++k) {
      const double d_now = trace.records[k].dist_to_ubar;
      const double d_next = trace.records[k + 1].dist_to_ubar;
      if (d_now <= floor) break;
      CHECK(d_next <= (eta + 1e-6) * d_now);
    }
    CHECK(trace.records.back().dist_to_ustar < 1e-5);
  }
}

TEST_CASE("noisy runs keep every iterate and measurement feasible") {
  TestRng rng(999);
  for (int trial = 0; trial < 8; ++trial) {
    const auto inst = make_random_instance(rng);
    PolicyConfig cfg = inst.make_config(/*stop_eps=*/0.0, /*k_max=*/25);
    const DisturbanceModel noise(inst.D, static_cast<std::uint64_t>(trial) + 1);
    const IterationTrace trace = run_ilc(inst.plant, noise, cfg, Vector());
    REQUIRE(trace.status == RunStatus::k_max_reached);
    REQUIRE(trace.records.size() == 26);
    for (const auto& rec : trace.records) {
      CHECK(rec.max_violation <= 1e-8);
      CHECK(robust_output_check(inst.uncertainty, inst.U, inst.Y, inst.D, rec.u).ok);
      CHECK(rec.k == &rec - trace.records.data());
    }
  }
}

TEST_CASE("identical seeds and configs give bit-identical traces") {
  TestRng rng(2024);
  const auto inst = make_random_instance(rng);
  PolicyConfig cfg = inst.make_config(/*stop_eps=*/0.0, /*k_max=*/15);
  const DisturbanceModel noise(inst.D, std::uint64_t{314159});
  const IterationTrace a = run_ilc(inst.plant, noise, cfg, Vector());
  const IterationTrace b = run_ilc(inst.plant, noise, cfg, Vector());
  REQUIRE(a.records.size() == b.records.size());
  for (size_t k = 0; k < a.records.size(); ++k) {
    CHECK((a.records[k].u - b.records[k].u).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((a.records[k].y - b.records[k].y).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(a.records[k].surrogate_cost == b.records[k].surrogate_cost);
  }
}

TEST_CASE("demo plant: noiseless surrogate cost is nonincreasing past the first step") {
  const DemoPlant demo = make_demo_plant();
  auto [M, w_M] = blend_model(demo.uncertainty, demo.uncertainty.nominal_weights);
  const RobustConstants rc = robust_constants(demo.uncertainty, demo.Q, demo.R, M);
  const StepWindow window = step_window(rc.mu, rc.L);
  auto X = std::make_shared<const TightenedSet>(demo.U, demo.Y, demo.D, demo.uncertainty);
  PolicyConfig cfg(demo.Q, demo.R, demo.r, M, window.alpha_default, X);
  cfg.stop_eps = 1e-10;
  cfg.k_max = 60;

  const IterationTrace trace =
      run_ilc(demo.sys, DisturbanceModel::zero(demo.sys.outputs()), cfg, Vector());
  REQUIRE(trace.records.size() > 3);
  for (size_t k = 1; k + 1 < trace.records.size(); ++k) {
    CHECK(trace.records[k + 1].surrogate_cost <=
          trace.records[k].surrogate_cost + 1e-9 * (1.0 + trace.records[k].surrogate_cost));
  }
  // The velocity box binds at the learned input.
  CHECK(trace.records.back().max_violation <= 1e-8);
  CHECK(trace.records.back().max_violation > -0.2);
}

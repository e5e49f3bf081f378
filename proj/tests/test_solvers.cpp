#include "doctest.h"
#include "oracles.hpp"

#include "rwl1df/filters.hpp"
#include "rwl1df/solvers.hpp"

using namespace rwl1df;

namespace {

Vector randn(Index n, Rng& rng) {
  std::normal_distribution<double> nd;
  return Vector::NullaryExpr(n, [&] { return nd(rng); });
}

Vector positive(Index n, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Vector::NullaryExpr(n, [&] { return u(rng); });
}

WeightedL1Problem random_weighted(Index m, Index n, double lambda0, Rng& rng) {
  const auto g = gaussian_sensing(m, n, rng);
  return {g.as_operator(), randn(m, rng), lambda0, positive(n, rng, 0.5, 2.0), std::nullopt, {}};
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(1.0, 0.25) == 0.75);
  CHECK(soft_threshold(-0.2, 0.5) == 0.0);
  CHECK(soft_threshold(0.0, 3.0) == 0.0);
  CHECK(soft_threshold(-2.0, 0.5) == -1.5);
}

TEST_CASE("two-anchor prox agrees with a fine scan") {
  Rng rng(31);
  for (int k = 0; k < 200; ++k) {
    const double v = 3.0 * randn(1, rng)[0];
    const double step = positive(1, rng, 0.1, 2.0)[0];
    const double a = positive(1, rng, 0.0, 1.0)[0];
    const double b = positive(1, rng, 0.0, 1.0)[0];
    const double d = 2.0 * randn(1, rng)[0];
    const auto f = [&](double z) {
      return (z - v) * (z - v) / (2 * step) + a * std::abs(z) + b * std::abs(z - d);
    };
    const double z = prox_two_anchor(v, step, a, b, d);
    for (double probe : {z - 1e-4, z + 1e-4, 0.0, d, v}) CHECK(f(z) <= f(probe) + 1e-12);
  }
}

TEST_CASE("weighted l1 closed forms") {
  Rng rng(32);
  const auto g = gaussian_sensing(4, 6, rng).as_operator();
  WeightedL1Problem zero{g, Vector::Zero(4), 0.3, positive(6, rng, 0.5, 2.0), std::nullopt, {}};
  CHECK(solve_weighted_l1(zero, SolverSettings{}).z.isZero(0.0));

  WeightedL1Problem scalar{LinearOperator::identity(1), Vector::Constant(1, 1.0), 0.5,
                           Vector::Constant(1, 1.0), std::nullopt, {}};
  CHECK(solve_weighted_l1(scalar, SolverSettings{}).z[0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("weighted l1 matches sign-pattern enumeration") {
  Rng rng(33);
  for (int k = 0; k < 25; ++k) {
    CAPTURE(k);
    const Index n = 6;
    const Index m = (k % 2 == 0) ? 4 : 6;
    const auto p = random_weighted(m, n, 0.1, rng);
    const SolveResult r = solve_weighted_l1(p, SolverSettings{});
    oracle::PiecewiseL1 o{p.op.materialize(), p.y, p.base_scale * p.weights, Vector::Zero(n),
                          Vector::Zero(n)};
    const Vector z_star = oracle::brute_force(o);
    CHECK((r.z - z_star).norm() < 1e-4);
    CHECK(kkt_violation(p, r.z) <= kkt_tolerance(p));
    CHECK(weighted_l1_objective(p, r.z) <= o.objective(z_star) + 1e-10);
  }
}

TEST_CASE("two-kink problems match region enumeration") {
  Rng rng(34);
  for (int k = 0; k < 20; ++k) {
    CAPTURE(k);
    const Index n = 5;
    const Index m = 3;
    const auto g = gaussian_sensing(m, n, rng);
    const Vector truth = randn(n, rng);
    const Vector pred = truth + 0.3 * randn(n, rng);
    const Vector y = *g.entries * truth + 0.05 * randn(m, rng);
    MeasurementFrame frame{g.as_operator(), y, 0.0};
    const BpdnDfParams params{0.05, 0.2, 1};
    const StepOutcome out =
        bpdn_df_step(frame, LinearOperator::identity(n), pred, params, SolverSettings{});
    oracle::PiecewiseL1 o{*g.entries, y, Vector::Constant(n, params.gamma),
                          Vector::Constant(n, params.kappa), pred};
    const Vector z_star = oracle::brute_force(o);
    CHECK((out.z - z_star).norm() < 1e-4);
  }
}

TEST_CASE("composite problems certify through both solver paths") {
  Rng rng(35);
  for (Index exact_max : {Index{0}, Index{1024}}) {
    SolverSettings s;
    s.exact_max_dim = exact_max;
    s.max_iters = 20000;
    for (int k = 0; k < 5; ++k) {
      const auto p = random_weighted(30, 80, 0.05, rng);
      const SolveResult r = solve_weighted_l1(p, s);
      CAPTURE(exact_max);
      CHECK(kkt_violation(p, r.z) <= kkt_tolerance(p));
    }
  }
}

TEST_CASE("kkt violation detects non-optimal points") {
  Rng rng(36);
  const auto p = random_weighted(10, 20, 0.1, rng);
  const SolveResult r = solve_weighted_l1(p, SolverSettings{});
  Vector bumped = r.z;
  bumped[0] += 0.1;
  CHECK(kkt_violation(p, bumped) > kkt_tolerance(p));
  CHECK(composite_kkt_violation(as_composite(p), r.z) == doctest::Approx(kkt_violation(p, r.z)));
}

TEST_CASE("quadratic prior with no measurements returns the target") {
  Rng rng(37);
  const Vector pred = randn(8, rng);
  MeasurementFrame frame{LinearOperator::from_matrix(Matrix::Zero(0, 8)), Vector::Zero(0), 0.0};
  const StepOutcome out = bpdn_df_step(frame, LinearOperator::identity(8), pred,
                                       BpdnDfParams{1e-12, 1.0, 2}, SolverSettings{});
  CHECK((out.z - pred).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("strongly convex composite problems certify") {
  Rng rng(38);
  const auto g = gaussian_sensing(20, 64, rng);
  const Vector target = randn(64, rng);
  CompositeProblem p{g.as_operator(), randn(20, rng),
                     QuadraticPrior{LinearOperator::identity(64), target, 0.4},
                     Vector::Constant(64, 0.05), {}, {}, std::nullopt, {}};
  const SolveResult r = solve_composite(p, SolverSettings{});
  CHECK(composite_kkt_violation(p, r.z) <= 1e-6 * 0.05);
}

TEST_CASE("analysis l1 solution is a directional minimum") {
  Rng rng(39);
  const Index n = 6;
  const auto g = gaussian_sensing(4, n, rng);
  const Matrix b = Matrix::NullaryExpr(n, n, [&] { return std::normal_distribution<>()(rng); });
  AnalysisL1Problem p{g.as_operator(), randn(4, rng), Vector::Constant(n, 0.1),
                      LinearOperator::from_matrix(b), randn(n, rng), 0.3};
  SolverSettings s;
  s.max_iters = 200000;
  s.rel_tol = 1e-14;
  const SolveResult r = solve_analysis_l1(p, s, Vector::Zero(n));
  const double f0 = analysis_l1_objective(p, r.z);
  // A convex function is minimized where no direction decreases it.
  for (int k = 0; k < 500; ++k) {
    const Vector dir = randn(n, rng).normalized();
    CHECK(analysis_l1_objective(p, r.z + 1e-3 * dir) >= f0 - 1e-7);
  }
}

TEST_CASE("problem validation") {
  Rng rng(40);
  auto p = random_weighted(4, 6, 0.1, rng);
  p.weights[2] = -1.0;
  CHECK_THROWS_AS(p.validate(), InvalidParameter);
  p.weights = Vector::Ones(5);
  CHECK_THROWS_AS(p.validate(), InvalidDimension);
  SolverSettings s;
  s.max_iters = 0;
  CHECK_THROWS(s.validate());
}

TEST_CASE("two-kink problems with saturated free sets certify") {
  // Small penalties push the free set up to M coordinates, so further
  // releases have to leave through a null direction of the Hessian.
  Rng rng(41);
  for (int k = 0; k < 200; ++k) {
    CAPTURE(k);
    const Index n = 12;
    const Index m = 4;
    const auto g = gaussian_sensing(m, n, rng);
    const Vector truth = randn(n, rng);
    const Vector pred = truth + 0.5 * randn(n, rng);
    const Vector y = *g.entries * truth + 0.01 * randn(m, rng);
    CompositeProblem p{g.as_operator(), y, std::nullopt, Vector::Constant(n, 1e-4),
                       Vector::Constant(n, 5e-5), pred, std::nullopt, {}};
    const SolveResult r = solve_composite(p, SolverSettings{}, pred);
    CHECK(r.status == SolveStatus::converged);
    CHECK(composite_kkt_violation(p, r.z) <= 1e-6 * 1e-4);
  }
}

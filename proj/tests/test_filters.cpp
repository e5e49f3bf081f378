#include "doctest.h"

#include "rwl1df/filters.hpp"
#include "rwl1df/synthetic.hpp"
#include "rwl1df/wavelet.hpp"

using namespace rwl1df;

namespace {

Vector randn(Index n, Rng& rng) {
  std::normal_distribution<double> nd;
  return Vector::NullaryExpr(n, [&] { return nd(rng); });
}

}  // namespace

TEST_CASE("static weight rule") {
  LsmParams p{1.0, 1.0, 1.0, 0.01, 10};
  const Vector w = rwl1_weight_update((Vector(2) << 0.0, 0.99).finished(), p);
  CHECK(w[0] == doctest::Approx(100.0));
  CHECK(w[1] == doctest::Approx(1.0));
}

TEST_CASE("dynamic weight rule") {
  LsmParams p{1.0, 1.0, 1.0, 0.01, 10};
  const Vector zero = Vector::Zero(3);
  CHECK((rwl1_df_weight_update(zero, zero, p).array() - 200.0).abs().maxCoeff() < 1e-12);
  const Vector pred = (Vector(3) << 1.99, 1.0, 10.0).finished();
  const Vector w = rwl1_df_weight_update(zero, pred, p);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[2] < w[1]);
}

TEST_CASE("dynamic weights at zero are proportional to static ones") {
  LsmParams p{1.0, 0.7, 1.3, 0.05, 10};
  const Vector zero = Vector::Zero(6);
  const Vector s = rwl1_weight_update(zero, p);
  const Vector d = rwl1_df_weight_update(zero, zero, p);
  const Vector ratio = d.cwiseQuotient(s);
  CHECK((ratio.array() - ratio[0]).abs().maxCoeff() < 1e-12);
  CHECK(ratio[0] == doctest::Approx(2.0 * p.tau / p.beta));
}

TEST_CASE("zero measurements give zero estimates at the weight fixed points") {
  Rng rng(41);
  const auto g = gaussian_sensing(5, 12, rng).as_operator();
  MeasurementFrame frame{g, Vector::Zero(5), 0.0};
  const LinearOperator w = LinearOperator::identity(12);
  LsmParams p{0.1, 0.5, 2.0, 0.1, 10};
  CHECK(bpdn_step(frame, w, 0.1, SolverSettings{}).z.isZero(0.0));

  const StepOutcome st = rwl1_static(frame, w, p, SolverSettings{});
  CHECK(st.z.isZero(0.0));
  CHECK((st.weights.array() - p.beta / p.eta).abs().maxCoeff() < 1e-12);

  const StepOutcome dy = rwl1_df_em(frame, w, Vector::Zero(12), Vector::Zero(12), p, SolverSettings{});
  CHECK(dy.z.isZero(0.0));
  CHECK((dy.weights.array() - 2.0 * p.tau / p.eta).abs().maxCoeff() < 1e-12);
}

TEST_CASE("exact prediction with full identity sensing recovers the truth") {
  Rng rng(42);
  const Index n = 16;
  Vector truth = Vector::Zero(n);
  truth[2] = 1.5;
  truth[9] = -2.0;
  truth[13] = 0.7;
  MeasurementFrame frame{LinearOperator::identity(n), truth, 0.0};
  FilterState prev{truth, Vector::Ones(n), 0, 0, true};
  LsmParams p{1e-4, 1.0, 1.0, 0.01, 10};
  const FilterState next =
      rwl1_df_step(frame, LinearOperator::identity(n), prev, DynamicsModel::identity(), p, SolverSettings{});
  CHECK((next.z_prev - truth).norm() < 1e-3);
  CHECK(next.t_index == 1);
}

TEST_CASE("bpdn-df with kappa zero equals bpdn") {
  Rng rng(43);
  const auto g = gaussian_sensing(20, 50, rng).as_operator();
  MeasurementFrame frame{g, randn(20, rng), 0.0};
  const LinearOperator w = LinearOperator::identity(50);
  const Vector pred = randn(50, rng);
  for (int q : {1, 2}) {
    const StepOutcome a = bpdn_df_step(frame, w, pred, BpdnDfParams{0.05, 0.0, q}, SolverSettings{});
    const StepOutcome b = bpdn_step(frame, w, 0.05, SolverSettings{});
    CHECK((a.z - b.z).norm() < 1e-8);
  }
}

TEST_CASE("prediction through an orthonormal synthesis") {
  WaveletConfig wc{4, 2, 16, WaveletDims::one};
  const LinearOperator w = dwt_synthesis_operator(wc);
  Rng rng(44);
  const Vector z = randn(16, rng);
  CHECK((predict_coefficients(w, DynamicsModel::identity(), z) - z).norm() < 1e-12);
  PermutationDynamics shift;
  for (Index i = 0; i < 16; ++i) {
    shift.perm.push_back((i + 1) % 16);
    shift.sign.push_back(1.0);
  }
  DynamicsModel dyn{[&](const Vector& x) { return shift.apply(x); }, "shift"};
  const Vector expect = dwt_forward(shift.apply(dwt_inverse(z, wc)), wc);
  CHECK((predict_coefficients(w, dyn, z) - expect).norm() < 1e-12);
}

TEST_CASE("general synthesis with q = 1 uses the analysis solver") {
  Rng rng(45);
  WaveletConfig wc{4, 1, 8, WaveletDims::one};
  const LinearOperator w = dwt_synthesis_operator(wc);
  const auto g = gaussian_sensing(6, 8, rng).as_operator();
  MeasurementFrame frame{g, randn(6, rng), 0.0};
  const Vector pred = randn(8, rng);
  SolverSettings s;
  s.max_iters = 100000;
  const BpdnDfParams params{0.05, 0.2, 1};
  const StepOutcome out = bpdn_df_step(frame, w, pred, params, s);
  const LinearOperator a = compose(g, w);
  AnalysisL1Problem p{a, frame.y, Vector::Constant(8, params.gamma), w, pred, params.kappa};
  const double f0 = analysis_l1_objective(p, out.z);
  for (int k = 0; k < 200; ++k) {
    CHECK(analysis_l1_objective(p, out.z + 1e-3 * randn(8, rng).normalized()) >= f0 - 1e-7);
  }
}

TEST_CASE("filter inputs are validated") {
  Rng rng(46);
  const auto g = gaussian_sensing(5, 12, rng).as_operator();
  MeasurementFrame frame{g, Vector::Zero(4), 0.0};
  CHECK_THROWS_AS(bpdn_step(frame, LinearOperator::identity(12), 0.1, SolverSettings{}),
                  InvalidDimension);
  CHECK_THROWS_AS((LsmParams{1.0, 1.0, 1.0, 0.0, 10}.validate()), InvalidParameter);
  CHECK_THROWS_AS((LsmParams{1.0, 1.0, 1.0, 0.1, 0}.validate()), InvalidParameter);
  CHECK_THROWS_AS((BpdnDfParams{1.0, 1.0, 3}.validate()), InvalidParameter);
}

#include "doctest.h"
#include "oracles.hpp"

#include "rwl1df/kalman.hpp"

using namespace rwl1df;

namespace {

Matrix random_spd(Index n, Rng& rng) {
  const Matrix a = Matrix::NullaryExpr(n, n, [&] { return std::normal_distribution<>()(rng); });
  return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("scalar kalman update") {
  KalmanState st{Vector::Zero(1), Matrix::Ones(1, 1), Matrix::Zero(1, 1), Matrix::Ones(1, 1),
                 Matrix::Ones(1, 1)};
  MeasurementFrame frame{LinearOperator::identity(1), Vector::Ones(1), 1.0};
  const KalmanState next = kalman_step(frame, st);
  CHECK(next.mean[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("uninformative measurement keeps the prior") {
  Rng rng(51);
  const Vector m = Vector::NullaryExpr(3, [&] { return std::normal_distribution<>()(rng); });
  KalmanState st{m, random_spd(3, rng), Matrix::Zero(3, 3), 1e12 * Matrix::Identity(2, 2),
                 Matrix::Identity(3, 3)};
  const Matrix phi = Matrix::NullaryExpr(2, 3, [&] { return std::normal_distribution<>()(rng); });
  MeasurementFrame frame{LinearOperator::from_matrix(phi), Vector::Ones(2), 1e12};
  const KalmanState next = kalman_step(frame, st);
  CHECK((next.mean - m).norm() / m.norm() < 1e-9);
}

TEST_CASE("kalman step equals the dense MAP solve") {
  Rng rng(52);
  for (int k = 0; k < 20; ++k) {
    const Index n = 3;
    const Index mm = 2;
    const Matrix f = Matrix::NullaryExpr(n, n, [&] { return std::normal_distribution<>()(rng); });
    KalmanState st{Vector::NullaryExpr(n, [&] { return std::normal_distribution<>()(rng); }),
                   random_spd(n, rng), random_spd(n, rng), random_spd(mm, rng), f};
    const Matrix phi = Matrix::NullaryExpr(mm, n, [&] { return std::normal_distribution<>()(rng); });
    const Vector y = Vector::NullaryExpr(mm, [&] { return std::normal_distribution<>()(rng); });
    const KalmanState next = kalman_step(MeasurementFrame{LinearOperator::from_matrix(phi), y, 0.0}, st);
    const auto ref = oracle::kalman_normal_equations(f, st.process_cov, st.cov, st.mean, phi,
                                                     st.meas_cov, y);
    CHECK((next.mean - ref.mean).norm() <= 1e-8 * std::max(1.0, ref.mean.norm()));
    CHECK((next.cov - ref.cov).norm() <= 1e-8 * std::max(1.0, ref.cov.norm()));
  }
}

TEST_CASE("kalman errors") {
  KalmanState st{Vector::Zero(2), Matrix::Zero(2, 2), Matrix::Zero(2, 2), Matrix::Zero(1, 1),
                 Matrix::Identity(2, 2)};
  MeasurementFrame frame{LinearOperator::from_matrix(Matrix::Ones(1, 2)), Vector::Ones(1), 0.0};
  CHECK_THROWS_AS(kalman_step(frame, st), NumericalError);
  st.meas_cov = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(kalman_step(frame, st), InvalidDimension);
}

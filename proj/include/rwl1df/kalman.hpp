#pragma once

#include "rwl1df/core.hpp"
#include "rwl1df/filters.hpp"

namespace rwl1df {

/// Linear-Gaussian filter state: estimate `mean` with covariance `cov`, and
/// the model used for the next step (x_k = F x_{k-1} + N(0, Q),
/// y_k = Phi x_k + N(0, R)).
struct KalmanState {
  Vector mean;
  Matrix cov;
  Matrix process_cov;
  Matrix meas_cov;
  Matrix dynamics;

  void validate() const;
};

/// Predict through `dynamics`, then condition on the frame. The frame's
/// sensing operator is materialized as a dense matrix.
///
/// Throws NumericalError (with the reciprocal condition estimate) when the
/// innovation covariance Phi P Phi^T + R is not positive definite.
KalmanState kalman_step(const MeasurementFrame& frame, const KalmanState& st);

}  // namespace rwl1df

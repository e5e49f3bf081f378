#include "rwl1df/kalman.hpp"

#include <sstream>

namespace rwl1df {
namespace {

bool symmetric(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

void KalmanState::validate() const {
  const Index n = mean.size();
  if (cov.rows() != n || cov.cols() != n || process_cov.rows() != n ||
      process_cov.cols() != n || dynamics.rows() != n || dynamics.cols() != n) {
    throw InvalidDimension("kalman: state matrices must be " + std::to_string(n) + "x" +
                           std::to_string(n));
  }
  if (meas_cov.rows() != meas_cov.cols()) throw InvalidDimension("kalman: R must be square");
  if (n == 0) return;
  if (!symmetric(cov, 1e-10) || !symmetric(process_cov, 1e-10) ||
      (meas_cov.size() > 0 && !symmetric(meas_cov, 1e-10))) {
    throw InvalidParameter("kalman: covariance matrices must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw InvalidParameter("kalman: state covariance is not positive semidefinite");
  }
}

KalmanState kalman_step(const MeasurementFrame& frame, const KalmanState& st) {
  const Index n = st.mean.size();
  const Index m = frame.y.size();
  if (frame.sensing.in_dim() != n || frame.sensing.out_dim() != m) {
    throw InvalidDimension("kalman: sensing operator is " +
                           std::to_string(frame.sensing.out_dim()) + "x" +
                           std::to_string(frame.sensing.in_dim()) + ", expected " +
                           std::to_string(m) + "x" + std::to_string(n));
  }
  if (st.meas_cov.rows() != m) {
    throw InvalidDimension("kalman: measurement covariance must be " + std::to_string(m) +
                           "x" + std::to_string(m));
  }

  const Matrix phi = frame.sensing.materialize();
  KalmanState next = st;
  const Vector prior_mean = st.dynamics * st.mean;
  const Matrix prior_cov = st.dynamics * st.cov * st.dynamics.transpose() + st.process_cov;

  if (m == 0) {
    next.mean = prior_mean;
    next.cov = 0.5 * (prior_cov + prior_cov.transpose());
    return next;
  }

  const Matrix cross = prior_cov * phi.transpose();  // Sigma Phi^T
  Matrix innovation_cov = phi * cross + st.meas_cov;
  innovation_cov = 0.5 * (innovation_cov + innovation_cov.transpose());
  const Eigen::LDLT<Matrix> ldlt(innovation_cov);
  const double rcond = ldlt.rcond();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(rcond > 1e-15)) {
    std::ostringstream msg;
    msg << "kalman: innovation covariance (" << m << "x" << m
        << ") is singular or indefinite; reciprocal condition estimate " << rcond;
    throw NumericalError(msg.str());
  }
  // K = Sigma Phi^T S^{-1}
  const Matrix gain = ldlt.solve(cross.transpose()).transpose();
  next.mean = prior_mean + gain * (frame.y - phi * prior_mean);
  Matrix post = prior_cov - gain * cross.transpose();
  next.cov = 0.5 * (post + post.transpose());
  return next;
}

}  // namespace rwl1df

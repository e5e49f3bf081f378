#pragma once

#include "rwl1df/core.hpp"
#include "rwl1df/operators.hpp"
#include "rwl1df/solvers.hpp"

#include <functional>
#include <string>

namespace rwl1df {

/// One time step's observation y = Phi x + noise.
struct MeasurementFrame {
  LinearOperator sensing;
  Vector y;
  double noise_var = 0.0;
};

/// Hyperparameters of the Laplacian scale mixture updates.
///
/// Static RWL1 uses  w[i] = beta / (|z[i]| + eta);
/// RWL1-DF uses      w[i] = 2 tau / (beta |z[i]| + |prediction[i]| + eta).
struct LsmParams {
  double lambda0 = 1.0;
  double tau = 1.0;
  double beta = 1.0;
  double eta = 0.01;
  int em_iters = 10;

  void validate() const;
};

struct BpdnDfParams {
  double gamma = 1.0;
  double kappa = 1.0;
  int q = 1;

  void validate() const;
};

/// Known state evolution f_k acting in the signal domain.
struct DynamicsModel {
  std::function<Vector(const Vector&)> predict;
  std::string description;

  static DynamicsModel identity();
};

/// Carried between RWL1-DF time steps.
struct FilterState {
  CoefficientVector z_prev;
  WeightVector weights;
  int t_index = 0;
  // Diagnostics of the step that produced this state.
  int em_rounds = 0;
  bool converged = true;
};

/// EM loops stop early once ||w_new - w_old|| / ||w_old|| falls below this.
inline constexpr double kWeightChangeTol = 1e-4;

struct StepOutcome {
  CoefficientVector z;
  WeightVector weights;
  int em_rounds = 0;
  /// False if any inner solve hit its iteration cap.
  bool converged = true;
};

StepOutcome bpdn_step(const MeasurementFrame& frame, const LinearOperator& synthesis,
                      double lambda, const SolverSettings& s);

/// beta / (|z| + eta), elementwise.
WeightVector rwl1_weight_update(const CoefficientVector& z, const LsmParams& p);

/// Independent re-weighted l1 (EM) starting from unit weights.
StepOutcome rwl1_static(const MeasurementFrame& frame, const LinearOperator& synthesis,
                        const LsmParams& p, const SolverSettings& s);

/// 2 tau / (beta |z| + |prediction| + eta), elementwise.
WeightVector rwl1_df_weight_update(const CoefficientVector& z_current,
                                   const CoefficientVector& prediction_coeffs,
                                   const LsmParams& p);

/// Coefficients of the propagated previous estimate, W^T f(W z_prev).
/// `synthesis` must be orthonormal so that W^T inverts it.
CoefficientVector predict_coefficients(const LinearOperator& synthesis,
                                       const DynamicsModel& dyn, const CoefficientVector& z_prev);

/// One re-weighted l1 dynamic filter step.
FilterState rwl1_df_step(const MeasurementFrame& frame, const LinearOperator& synthesis,
                         const FilterState& prev, const DynamicsModel& dyn, const LsmParams& p,
                         const SolverSettings& s);

/// Same, with the prediction coefficients supplied directly.
StepOutcome rwl1_df_em(const MeasurementFrame& frame, const LinearOperator& synthesis,
                       const CoefficientVector& prediction_coeffs,
                       const CoefficientVector& warm_start, const LsmParams& p,
                       const SolverSettings& s);

/// min ||y - Phi W z||^2 + gamma ||z||_1 + kappa ||W z - prediction||_q^q.
StepOutcome bpdn_df_step(const MeasurementFrame& frame, const LinearOperator& synthesis,
                         const Vector& prediction_signal, const BpdnDfParams& p,
                         const SolverSettings& s);
StepOutcome bpdn_df_step(const MeasurementFrame& frame, const LinearOperator& synthesis,
                         const Vector& prediction_signal, const BpdnDfParams& p,
                         const SolverSettings& s, const CoefficientVector& warm_start);

}  // namespace rwl1df

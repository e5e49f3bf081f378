#pragma once

#include "rwl1df/core.hpp"
#include "rwl1df/operators.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace rwl1df {

struct SolverSettings {
  int max_iters = 2000;
  /// Stop once the relative objective change stays below this for a few
  /// consecutive iterations.
  double rel_tol = 1e-8;
  /// Power iterations used when the problem carries no Lipschitz constant.
  int power_iters = 100;
  /// Refine the final iterate by solving the stationarity system on its
  /// active set (kept only if it preserves the sign pattern).
  bool polish = true;
  /// Problems with at most this many coefficients go to the exact
  /// active-set method first; larger ones (and any it cannot certify) use
  /// accelerated proximal gradient.
  Index exact_max_dim = 8192;

  void validate() const;
};

/// `converged` means the result passed the first-order optimality check
/// (1e-6 times the largest penalty weight) for composite problems, and a
/// stalled iteration for the analysis solver.
enum class SolveStatus { converged, uncertified };

struct SolveResult {
  CoefficientVector z;
  SolveStatus status = SolveStatus::converged;
  int iterations = 0;
  double objective = 0.0;
  /// composite_kkt_violation of z (composite problems only).
  double kkt_violation = 0.0;
};

/// Columns of A^T A + kappa B^T B, computed on first use and kept, so that
/// repeated solves on the same operators (EM rounds) pay for each column
/// once. Not safe for concurrent use.
class GramColumns {
 public:
  GramColumns(LinearOperator op, std::optional<LinearOperator> prior_map, double kappa);

  Index dim() const { return op_.in_dim(); }
  const Vector& col(Index i);

 private:
  LinearOperator op_;
  std::optional<LinearOperator> prior_map_;
  double kappa_;
  std::vector<Vector> cols_;
  std::vector<char> have_;
};

/// min_z ||y - A z||^2 + base_scale * sum_i weights[i] |z[i]|
struct WeightedL1Problem {
  LinearOperator op;
  Vector y;
  double base_scale = 1.0;
  WeightVector weights;
  /// Largest eigenvalue of A^T A if already known (skips power iteration).
  std::optional<double> lipschitz;
  /// Shared column store for A^T A (see GramColumns).
  std::shared_ptr<GramColumns> gram;

  void validate() const;
};

/// kappa * ||map z - target||_2^2 added to the smooth part.
struct QuadraticPrior {
  LinearOperator map;
  Vector target;
  double kappa = 0.0;
};

/// General separable problem handled by the proximal core:
///
///   ||y - A z||^2 + kappa ||B z - c||^2
///     + sum_i l1[i] |z[i]| + anchor_l1[i] |z[i] - anchor[i]|
///
/// The quadratic prior is optional; anchor_l1/anchor may be empty.
struct CompositeProblem {
  LinearOperator op;
  Vector y;
  std::optional<QuadraticPrior> prior;
  Vector l1;
  Vector anchor_l1;
  Vector anchor;
  /// Largest eigenvalue of A^T A + kappa B^T B, if known.
  std::optional<double> lipschitz;
  /// Shared column store for A^T A + kappa B^T B (see GramColumns).
  std::shared_ptr<GramColumns> gram;

  Index dim() const { return op.in_dim(); }
  bool has_anchor() const { return anchor_l1.size() > 0; }
  void validate() const;
};

/// Power-iteration estimate of the largest eigenvalue of A^T A.
/// Returns 0 for the zero operator.
double estimate_lipschitz(const LinearOperator& op, int iters, Rng& rng);

double soft_threshold(double v, double t);

/// Exact minimizer of (1/(2 step))(z - v)^2 + a|z| + b|z - d|.
double prox_two_anchor(double v, double step, double a, double b, double d);

SolveResult solve_composite(const CompositeProblem& p, const SolverSettings& s,
                            const Vector& warm_start);
SolveResult solve_composite(const CompositeProblem& p, const SolverSettings& s);

double composite_objective(const CompositeProblem& p, const Vector& z);

/// Largest violation of the first-order optimality conditions at z
/// (0 means z is an exact minimizer).
double composite_kkt_violation(const CompositeProblem& p, const Vector& z);

CompositeProblem as_composite(const WeightedL1Problem& p);

SolveResult solve_weighted_l1(const WeightedL1Problem& p, const SolverSettings& s,
                              const Vector& warm_start);
SolveResult solve_weighted_l1(const WeightedL1Problem& p, const SolverSettings& s);

double weighted_l1_objective(const WeightedL1Problem& p, const Vector& z);

/// max_i of the KKT residual with g = -2 A^T (y - A z):
///   z[i] != 0:  |g[i] + sign(z[i]) lambda0 w[i]|
///   z[i] == 0:  max(0, |g[i]| - lambda0 w[i])
double kkt_violation(const WeightedL1Problem& p, const Vector& z);

/// 1e-6 * lambda0 * max(w): the certification tolerance for kkt_violation.
double kkt_tolerance(const WeightedL1Problem& p);

/// ||y - A z||^2 + sum_i l1[i]|z[i]| + kappa ||B z - c||_1 for a general B.
struct AnalysisL1Problem {
  LinearOperator op;
  Vector y;
  Vector l1;
  LinearOperator map;
  Vector target;
  double kappa = 0.0;

  void validate() const;
};

double analysis_l1_objective(const AnalysisL1Problem& p, const Vector& z);

/// Primal-dual (Condat-Vu) iteration; used when the l1 deviation term is
/// not separable in z.
SolveResult solve_analysis_l1(const AnalysisL1Problem& p, const SolverSettings& s,
                              const Vector& warm_start);

}  // namespace rwl1df

#include "rwl1df/filters.hpp"

#include <cmath>
#include <memory>
#include <optional>
#include <string>

namespace rwl1df {
namespace {

constexpr std::uint64_t kLipschitzSeed = 0x51f7ull;

void check_frame(const MeasurementFrame& frame, const LinearOperator& synthesis) {
  if (frame.y.size() != frame.sensing.out_dim()) {
    throw InvalidDimension("frame: y has length " + std::to_string(frame.y.size()) +
                           " but sensing operator has " +
                           std::to_string(frame.sensing.out_dim()) + " rows");
  }
  if (frame.sensing.in_dim() != synthesis.out_dim()) {
    throw InvalidDimension("frame: sensing operator expects " +
                           std::to_string(frame.sensing.in_dim()) +
                           " samples but synthesis produces " +
                           std::to_string(synthesis.out_dim()));
  }
}

// Per-frame quantities shared by every solve on the same operator: the Gram
// matrix for problems small enough for the exact solver, the Lipschitz
// constant for the rest.
struct FrameCache {
  std::optional<double> lipschitz;
  std::shared_ptr<GramColumns> gram;
};

FrameCache frame_cache(const LinearOperator& a, const SolverSettings& s,
                       const QuadraticPrior* prior = nullptr) {
  FrameCache c;
  if (a.in_dim() <= s.exact_max_dim) {
    std::optional<LinearOperator> map;
    double kappa = 0.0;
    if (prior && prior->kappa != 0.0) {
      map = prior->map;
      kappa = prior->kappa;
    }
    c.gram = std::make_shared<GramColumns>(a, map, kappa);
  } else if (!prior) {
    Rng rng(kLipschitzSeed);
    c.lipschitz = estimate_lipschitz(a, s.power_iters, rng);
  }
  return c;
}

WeightedL1Problem weighted_problem(const LinearOperator& a, const Vector& y, double scale,
                                   WeightVector w, const FrameCache& c) {
  return WeightedL1Problem{a, y, scale, std::move(w), c.lipschitz, c.gram};
}

double relative_change(const Vector& next, const Vector& prev) {
  const double denom = prev.norm();
  return denom > 0.0 ? (next - prev).norm() / denom : (next - prev).norm();
}

}  // namespace

void LsmParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidParameter(std::string("lsm: ") + name + " must be > 0");
    }
  };
  positive(lambda0, "lambda0");
  positive(tau, "tau");
  positive(beta, "beta");
  positive(eta, "eta");
  if (em_iters < 1) throw InvalidParameter("lsm: em_iters must be >= 1");
}

void BpdnDfParams::validate() const {
  if (!(gamma > 0.0)) throw InvalidParameter("bpdn-df: gamma must be > 0");
  if (!(kappa >= 0.0)) throw InvalidParameter("bpdn-df: kappa must be >= 0");
  if (q != 1 && q != 2) {
    throw InvalidParameter("bpdn-df: unsupported norm q=" + std::to_string(q) +
                           " (expected 1 or 2)");
  }
}

DynamicsModel DynamicsModel::identity() {
  return DynamicsModel{[](const Vector& x) { return x; }, "identity"};
}

StepOutcome bpdn_step(const MeasurementFrame& frame, const LinearOperator& synthesis,
                      double lambda, const SolverSettings& s) {
  check_frame(frame, synthesis);
  const LinearOperator a = compose(frame.sensing, synthesis);
  const WeightedL1Problem problem =
      weighted_problem(a, frame.y, lambda, WeightVector::Ones(a.in_dim()), frame_cache(a, s));
  const SolveResult r = solve_weighted_l1(problem, s);
  return StepOutcome{r.z, problem.weights, 1, r.status == SolveStatus::converged};
}

WeightVector rwl1_weight_update(const CoefficientVector& z, const LsmParams& p) {
  return (p.beta / (z.array().abs() + p.eta)).matrix();
}

StepOutcome rwl1_static(const MeasurementFrame& frame, const LinearOperator& synthesis,
                        const LsmParams& p, const SolverSettings& s) {
  check_frame(frame, synthesis);
  p.validate();
  const LinearOperator a = compose(frame.sensing, synthesis);
  WeightedL1Problem problem =
      weighted_problem(a, frame.y, p.lambda0, WeightVector::Ones(a.in_dim()), frame_cache(a, s));
  StepOutcome out;
  out.z = CoefficientVector::Zero(a.in_dim());
  for (int round = 0; round < p.em_iters; ++round) {
    const SolveResult r = solve_weighted_l1(problem, s, out.z);
    out.z = r.z;
    out.converged = out.converged && r.status == SolveStatus::converged;
    out.em_rounds = round + 1;
    WeightVector next = rwl1_weight_update(out.z, p);
    const double change = relative_change(next, problem.weights);
    problem.weights = std::move(next);
    if (change < kWeightChangeTol) break;
  }
  out.weights = problem.weights;
  return out;
}

WeightVector rwl1_df_weight_update(const CoefficientVector& z_current,
                                   const CoefficientVector& prediction_coeffs,
                                   const LsmParams& p) {
  if (z_current.size() != prediction_coeffs.size()) {
    throw InvalidDimension("rwl1-df weights: coefficient and prediction lengths differ");
  }
  return (2.0 * p.tau /
          (p.beta * z_current.array().abs() + prediction_coeffs.array().abs() + p.eta))
      .matrix();
}

CoefficientVector predict_coefficients(const LinearOperator& synthesis,
                                       const DynamicsModel& dyn,
                                       const CoefficientVector& z_prev) {
  return synthesis.adjoint(dyn.predict(synthesis.apply(z_prev)));
}

StepOutcome rwl1_df_em(const MeasurementFrame& frame, const LinearOperator& synthesis,
                       const CoefficientVector& prediction_coeffs,
                       const CoefficientVector& warm_start, const LsmParams& p,
                       const SolverSettings& s) {
  check_frame(frame, synthesis);
  p.validate();
  const LinearOperator a = compose(frame.sensing, synthesis);
  if (prediction_coeffs.size() != a.in_dim() || warm_start.size() != a.in_dim()) {
    throw InvalidDimension("rwl1-df: prediction/warm start length mismatch");
  }
  WeightedL1Problem problem = weighted_problem(
      a, frame.y, p.lambda0,
      rwl1_df_weight_update(CoefficientVector::Zero(a.in_dim()), prediction_coeffs, p),
      frame_cache(a, s));
  StepOutcome out;
  out.z = warm_start;
  for (int round = 0; round < p.em_iters; ++round) {
    const SolveResult r = solve_weighted_l1(problem, s, out.z);
    out.z = r.z;
    out.converged = out.converged && r.status == SolveStatus::converged;
    out.em_rounds = round + 1;
    WeightVector next = rwl1_df_weight_update(out.z, prediction_coeffs, p);
    const double change = relative_change(next, problem.weights);
    problem.weights = std::move(next);
    if (change < kWeightChangeTol) break;
  }
  out.weights = problem.weights;
  return out;
}

FilterState rwl1_df_step(const MeasurementFrame& frame, const LinearOperator& synthesis,
                         const FilterState& prev, const DynamicsModel& dyn, const LsmParams& p,
                         const SolverSettings& s) {
  if (prev.z_prev.size() != synthesis.in_dim()) {
    throw InvalidDimension("rwl1-df: previous estimate has length " +
                           std::to_string(prev.z_prev.size()) + ", expected " +
                           std::to_string(synthesis.in_dim()));
  }
  const CoefficientVector prediction = predict_coefficients(synthesis, dyn, prev.z_prev);
  // The previous estimate carried through the dynamics is the closest
  // available starting point for the first M-step.
  const StepOutcome out = rwl1_df_em(frame, synthesis, prediction, prediction, p, s);
  return FilterState{out.z, out.weights, prev.t_index + 1, out.em_rounds, out.converged};
}

StepOutcome bpdn_df_step(const MeasurementFrame& frame, const LinearOperator& synthesis,
                         const Vector& prediction_signal, const BpdnDfParams& p,
                         const SolverSettings& s) {
  return bpdn_df_step(frame, synthesis, prediction_signal, p, s,
                      CoefficientVector::Zero(synthesis.in_dim()));
}

StepOutcome bpdn_df_step(const MeasurementFrame& frame, const LinearOperator& synthesis,
                         const Vector& prediction_signal, const BpdnDfParams& p,
                         const SolverSettings& s, const CoefficientVector& warm_start) {
  check_frame(frame, synthesis);
  p.validate();
  if (prediction_signal.size() != synthesis.out_dim()) {
    throw InvalidDimension("bpdn-df: prediction has length " +
                           std::to_string(prediction_signal.size()) + ", expected " +
                           std::to_string(synthesis.out_dim()));
  }
  const LinearOperator a = compose(frame.sensing, synthesis);
  const Index n = a.in_dim();
  StepOutcome out;
  out.em_rounds = 1;

  if (p.kappa == 0.0 || p.q == 2) {
    CompositeProblem problem{a, frame.y, std::nullopt, Vector::Constant(n, p.gamma), {}, {},
                             std::nullopt, nullptr};
    if (p.kappa != 0.0) problem.prior = QuadraticPrior{synthesis, prediction_signal, p.kappa};
    const FrameCache c = frame_cache(a, s, problem.prior ? &*problem.prior : nullptr);
    problem.lipschitz = c.lipschitz;
    problem.gram = c.gram;
    const SolveResult r = solve_composite(problem, s, warm_start);
    out.z = r.z;
    out.converged = r.status == SolveStatus::converged;
    return out;
  }

  if (synthesis.is_identity()) {
    // kappa |z - prediction| is separable: handled exactly by the prox.
    const FrameCache c = frame_cache(a, s);
    CompositeProblem problem{a, frame.y, std::nullopt, Vector::Constant(n, p.gamma),
                             Vector::Constant(n, p.kappa), prediction_signal, c.lipschitz,
                             c.gram};
    const SolveResult r = solve_composite(problem, s, warm_start);
    out.z = r.z;
    out.converged = r.status == SolveStatus::converged;
    return out;
  }

  AnalysisL1Problem problem{a, frame.y, Vector::Constant(n, p.gamma), synthesis,
                            prediction_signal, p.kappa};
  SolverSettings pd = s;
  pd.max_iters = std::max(s.max_iters, 20 * s.max_iters);
  const SolveResult r = solve_analysis_l1(problem, pd, warm_start);
  out.z = r.z;
  out.converged = r.status == SolveStatus::converged;
  return out;
}

}  // namespace rwl1df

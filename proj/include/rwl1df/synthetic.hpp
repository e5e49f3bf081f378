#pragma once

#include "rwl1df/core.hpp"
#include "rwl1df/filters.hpp"
#include "rwl1df/operators.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace rwl1df {

struct SyntheticConfig {
  Index n = 500;
  Index s = 20;
  Index m = 70;
  /// Number of active coefficients routed to a wrong destination per step.
  Index p = 3;
  double noise_var = 0.001;
  int t_steps = 50;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Signed permutation f(x)[perm[i]] = sign[i] * x[i].
struct PermutationDynamics {
  std::vector<Index> perm;
  std::vector<double> sign;

  Vector apply(const Vector& x) const;
  Matrix matrix() const;
};

struct DynamicsStep {
  Vector x_next;
  PermutationDynamics f;
  /// Source indices whose values were sent to a wrong destination.
  std::vector<Index> misrouted;
  /// Misroutes that could not land on an empty slot (logged, rare).
  int collisions = 0;
  /// True when p exceeded the active support and everything was rerouted.
  bool degenerate = false;
};

struct GroundTruthSequence {
  std::vector<Vector> states;
  /// dynamics[k] maps states[k] to the known prediction of states[k+1].
  std::vector<PermutationDynamics> dynamics;
  /// innovation_log[k] lists the misrouted sources of transition k.
  std::vector<std::vector<Index>> innovation_log;
};

Vector gen_initial_state(const SyntheticConfig& cfg, Rng& rng);

DynamicsStep permutation_dynamics_step(const Vector& x_prev, const SyntheticConfig& cfg,
                                       Rng& rng);

/// Fresh unit-column Gaussian Phi and y = Phi x + N(0, noise_var).
MeasurementFrame measure_state(const Vector& x, Index m, double noise_var, Rng& rng);

GroundTruthSequence generate_sequence(const SyntheticConfig& cfg, Rng& rng);

/// CSV with header `t,index,value`, one row per nonzero (t is 1-based).
void write_sequence_csv(std::ostream& out, const GroundTruthSequence& seq);
/// Reads states back; `n` is the state dimension.
std::vector<Vector> read_sequence_csv(std::istream& in, Index n);

}  // namespace rwl1df

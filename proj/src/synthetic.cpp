#include "rwl1df/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace rwl1df {
namespace {

// Fisher-Yates with explicit uniform draws (independent of std::shuffle).
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

std::vector<Index> support_of(const Vector& x) {
  std::vector<Index> s;
  for (Index i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) s.push_back(i);
  }
  return s;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (n <= 0) throw InvalidConfig("synthetic: n must be positive");
  if (s < 0 || s > n) throw InvalidConfig("synthetic: need 0 <= s <= n");
  if (m <= 0 || m > n) throw InvalidConfig("synthetic: need 0 < m <= n");
  if (p < 0 || p > s) throw InvalidConfig("synthetic: need 0 <= p <= s");
  if (noise_var < 0.0) throw InvalidConfig("synthetic: noise variance must be >= 0");
  if (t_steps < 1) throw InvalidConfig("synthetic: t_steps must be >= 1");
}

Vector PermutationDynamics::apply(const Vector& x) const {
  Vector out = Vector::Zero(x.size());
  for (Index i = 0; i < x.size(); ++i) out[perm[i]] = sign[i] * x[i];
  return out;
}

Matrix PermutationDynamics::matrix() const {
  const auto n = static_cast<Index>(perm.size());
  Matrix f = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) f(perm[i], i) = sign[i];
  return f;
}

Vector gen_initial_state(const SyntheticConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<Index> idx(static_cast<std::size_t>(cfg.n));
  std::iota(idx.begin(), idx.end(), Index{0});
  shuffle(idx, rng);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x = Vector::Zero(cfg.n);
  for (Index k = 0; k < cfg.s; ++k) {
    double v = normal(rng);
    while (v == 0.0) v = normal(rng);
    x[idx[k]] = v;
  }
  return x;
}

DynamicsStep permutation_dynamics_step(const Vector& x_prev, const SyntheticConfig& cfg,
                                       Rng& rng) {
  cfg.validate();
  if (x_prev.size() != cfg.n) throw InvalidDimension("dynamics: state length mismatch");
  DynamicsStep step;
  step.f.perm.resize(static_cast<std::size_t>(cfg.n));
  std::iota(step.f.perm.begin(), step.f.perm.end(), Index{0});
  shuffle(step.f.perm, rng);
  step.f.sign.resize(static_cast<std::size_t>(cfg.n));
  std::bernoulli_distribution coin(0.5);
  for (auto& s : step.f.sign) s = coin(rng) ? 1.0 : -1.0;

  Vector known = step.f.apply(x_prev);
  step.x_next = known;

  std::vector<Index> active = support_of(x_prev);
  Index reroute = cfg.p;
  if (reroute > static_cast<Index>(active.size())) {
    step.degenerate = true;
    reroute = static_cast<Index>(active.size());
  }
  if (reroute == 0) return step;

  shuffle(active, rng);
  active.resize(static_cast<std::size_t>(reroute));
  std::sort(active.begin(), active.end());

  // Destinations: random order over slots empty under the known dynamics.
  std::vector<Index> empty;
  for (Index i = 0; i < cfg.n; ++i) {
    if (known[i] == 0.0) empty.push_back(i);
  }
  shuffle(empty, rng);

  std::size_t next_empty = 0;
  for (Index src : active) {
    const Index correct = step.f.perm[src];
    const double value = known[correct];
    Index dest = correct;
    if (next_empty < empty.size()) {
      dest = empty[next_empty++];
    } else {
      // No free slot left: land on a random other position.
      ++step.collisions;
      std::uniform_int_distribution<Index> pick(0, cfg.n - 1);
      dest = pick(rng);
    }
    step.x_next[correct] = 0.0;
    step.x_next[dest] += value;
    step.misrouted.push_back(src);
  }
  return step;
}

MeasurementFrame measure_state(const Vector& x, Index m, double noise_var, Rng& rng) {
  if (m < 1) throw InvalidDimension("measure_state: m must be >= 1");
  if (noise_var < 0.0) throw InvalidParameter("measure_state: noise variance must be >= 0");
  GaussianMatrix phi = gaussian_sensing(m, x.size(), rng);
  Vector y = (*phi.entries) * x;
  if (noise_var > 0.0) {
    std::normal_distribution<double> noise(0.0, std::sqrt(noise_var));
    for (auto& v : y) v += noise(rng);
  }
  return MeasurementFrame{phi.as_operator(), std::move(y), noise_var};
}

GroundTruthSequence generate_sequence(const SyntheticConfig& cfg, Rng& rng) {
  cfg.validate();
  GroundTruthSequence seq;
  seq.states.push_back(gen_initial_state(cfg, rng));
  for (int t = 1; t < cfg.t_steps; ++t) {
    DynamicsStep step = permutation_dynamics_step(seq.states.back(), cfg, rng);
    seq.states.push_back(std::move(step.x_next));
    seq.dynamics.push_back(std::move(step.f));
    seq.innovation_log.push_back(std::move(step.misrouted));
  }
  return seq;
}

void write_sequence_csv(std::ostream& out, const GroundTruthSequence& seq) {
  out << "t,index,value\n";
  char buf[64];
  for (std::size_t t = 0; t < seq.states.size(); ++t) {
    const Vector& x = seq.states[t];
    for (Index i = 0; i < x.size(); ++i) {
      if (x[i] == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.17g", x[i]);
      out << (t + 1) << ',' << i << ',' << buf << '\n';
    }
  }
}

std::vector<Vector> read_sequence_csv(std::istream& in, Index n) {
  std::string line;
  if (!std::getline(in, line) || line != "t,index,value") {
    throw IngestionError("sequence csv: missing header `t,index,value`");
  }
  std::vector<Vector> states;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    long long t = 0;
    long long idx = 0;
    double value = 0.0;
    char c1 = 0;
    char c2 = 0;
    if (!(row >> t >> c1 >> idx >> c2 >> value) || c1 != ',' || c2 != ',' || t < 1 ||
        idx < 0 || idx >= n) {
      throw IngestionError("sequence csv: malformed row at line " + std::to_string(line_no));
    }
    while (static_cast<long long>(states.size()) < t) states.push_back(Vector::Zero(n));
    states[static_cast<std::size_t>(t - 1)][idx] = value;
  }
  return states;
}

}  // namespace rwl1df

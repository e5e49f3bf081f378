#include "rwl1df/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rwl1df {
namespace {

constexpr int kStableIterations = 3;
constexpr double kStepMargin = 1.01;
constexpr int kFirstPolishAttempt = 10;
constexpr int kKktCheckEvery = 10;
constexpr Index kSeedMinDim = 256;
constexpr int kSeedIters = 200;
constexpr int kResidualRefresh = 64;
constexpr std::uint64_t kPowerSeed = 0x9e3779b97f4a7c15ull;

double sign(double v) { return (v > 0.0) - (v < 0.0); }

void require(bool ok, const char* what) {
  if (!ok) throw InvalidParameter(what);
}

// Largest eigenvalue of a symmetric PSD map by power iteration.
template <class Normal>
double power_iteration(Normal&& normal, Index n, int iters, Rng& rng) {
  if (n == 0) return 0.0;
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = gauss(rng);
  v.normalize();
  double estimate = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector w = normal(v);
    const double rayleigh = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    const double prev = estimate;
    estimate = std::max(rayleigh, 0.0);
    if (k > 2 && std::abs(estimate - prev) <= 1e-10 * estimate) break;
  }
  return estimate;
}

struct SmoothPart {
  const CompositeProblem& p;

  // Residual images used by value/gradient: r = A z - y, q = B z - c.
  struct Images {
    Vector az;
    Vector bz;
  };

  Images images(const Vector& z) const {
    Images im;
    im.az = p.op.apply(z);
    if (p.prior) im.bz = p.prior->map.apply(z);
    return im;
  }

  double value(const Images& im) const {
    double v = (im.az - p.y).squaredNorm();
    if (p.prior) v += p.prior->kappa * (im.bz - p.prior->target).squaredNorm();
    return v;
  }

  Vector gradient(const Images& im) const {
    Vector g = 2.0 * p.op.adjoint(im.az - p.y);
    if (p.prior && p.prior->kappa != 0.0) {
      g += 2.0 * p.prior->kappa * p.prior->map.adjoint(im.bz - p.prior->target);
    }
    return g;
  }

  // Hessian-vector product restricted to a mask.
  Vector hessian(const Vector& d) const {
    Vector h = 2.0 * p.op.adjoint(p.op.apply(d));
    if (p.prior && p.prior->kappa != 0.0) {
      h += 2.0 * p.prior->kappa * p.prior->map.adjoint(p.prior->map.apply(d));
    }
    return h;
  }
};

double penalty(const CompositeProblem& p, const Vector& z) {
  double v = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    v += p.l1[i] * std::abs(z[i]);
    if (p.has_anchor()) v += p.anchor_l1[i] * std::abs(z[i] - p.anchor[i]);
  }
  return v;
}

Vector prox(const CompositeProblem& p, const Vector& v, double step) {
  Vector out(v.size());
  if (p.has_anchor()) {
    for (Index i = 0; i < v.size(); ++i) {
      out[i] = prox_two_anchor(v[i], step, p.l1[i], p.anchor_l1[i], p.anchor[i]);
    }
  } else {
    for (Index i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], step * p.l1[i]);
  }
  return out;
}

// Coordinates not sitting on a kink of the penalty, with the penalty slope there.
bool is_free(const CompositeProblem& p, const Vector& z, Index i) {
  if (z[i] == 0.0) return false;
  if (p.has_anchor() && p.anchor_l1[i] != 0.0 && z[i] == p.anchor[i]) return false;
  return true;
}

double free_slope(const CompositeProblem& p, const Vector& z, Index i) {
  double s = p.l1[i] * sign(z[i]);
  if (p.has_anchor()) s += p.anchor_l1[i] * sign(z[i] - p.anchor[i]);
  return s;
}

// Solve the stationarity system on the free set by conjugate gradients and
// keep the result only if it stays in the same linear piece of the penalty.
Vector polish(const CompositeProblem& p, const SmoothPart& smooth, const Vector& z) {
  const Index n = z.size();
  Vector mask = Vector::Zero(n);
  Vector slope = Vector::Zero(n);
  Index free_count = 0;
  for (Index i = 0; i < n; ++i) {
    if (is_free(p, z, i)) {
      mask[i] = 1.0;
      slope[i] = free_slope(p, z, i);
      ++free_count;
    }
  }
  if (free_count == 0) return z;

  const Vector grad = smooth.gradient(smooth.images(z));
  Vector r = -(grad + slope).cwiseProduct(mask);
  const double r0 = r.norm();
  if (r0 == 0.0) return z;
  Vector d = r;
  Vector delta = Vector::Zero(n);
  double rr = r.squaredNorm();
  const int max_cg = static_cast<int>(std::min<Index>(2 * free_count + 20, 1000));
  for (int k = 0; k < max_cg; ++k) {
    const Vector hd = smooth.hessian(d).cwiseProduct(mask);
    const double curvature = d.dot(hd);
    if (!(curvature > 0.0)) break;
    const double alpha = rr / curvature;
    delta += alpha * d;
    r -= alpha * hd;
    const double rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= 1e-13 * r0) break;
    d = r + (rr_next / rr) * d;
    rr = rr_next;
  }

  Vector candidate = z + delta;
  for (Index i = 0; i < n; ++i) {
    if (mask[i] == 0.0) {
      candidate[i] = z[i];
      continue;
    }
    if (sign(candidate[i]) != sign(z[i])) return z;
    if (p.has_anchor() && sign(candidate[i] - p.anchor[i]) != sign(z[i] - p.anchor[i])) {
      return z;
    }
  }
  const double before = composite_objective(p, z);
  const double after = composite_objective(p, candidate);
  if (after > before + 1e-13 * std::abs(before)) return z;
  if (composite_kkt_violation(p, candidate) > composite_kkt_violation(p, z)) return z;
  return candidate;
}

// Which linear piece of the penalty each coordinate sits in.
void sign_pattern(const CompositeProblem& p, const Vector& z, std::vector<signed char>& out) {
  out.resize(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) {
    int code = static_cast<int>(sign(z[i]));
    if (p.has_anchor()) code = 3 * code + static_cast<int>(sign(z[i] - p.anchor[i]));
    out[static_cast<std::size_t>(i)] = static_cast<signed char>(code);
  }
}

double penalty_scale(const CompositeProblem& p) {
  double top = p.l1.size() > 0 ? p.l1.maxCoeff() : 0.0;
  if (p.has_anchor() && p.anchor_l1.size() > 0) top = std::max(top, p.anchor_l1.maxCoeff());
  return top;
}

}  // namespace

void SolverSettings::validate() const {
  require(max_iters >= 1, "solver: max_iters must be >= 1");
  require(rel_tol > 0.0, "solver: rel_tol must be positive");
  require(power_iters >= 1, "solver: power_iters must be >= 1");
  require(exact_max_dim >= 0, "solver: exact_max_dim must be >= 0");
}

void WeightedL1Problem::validate() const {
  if (y.size() != op.out_dim()) {
    throw InvalidDimension("weighted l1: measurement length " + std::to_string(y.size()) +
                           " != operator rows " + std::to_string(op.out_dim()));
  }
  if (weights.size() != op.in_dim()) {
    throw InvalidDimension("weighted l1: weight length " + std::to_string(weights.size()) +
                           " != operator columns " + std::to_string(op.in_dim()));
  }
  require(base_scale > 0.0 && std::isfinite(base_scale), "weighted l1: base scale must be > 0");
  for (Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0 && std::isfinite(weights[i]))) {
      throw InvalidParameter("weighted l1: weight " + std::to_string(i) +
                             " is not strictly positive");
    }
  }
}

void CompositeProblem::validate() const {
  const Index n = op.in_dim();
  if (y.size() != op.out_dim()) throw InvalidDimension("composite: measurement length mismatch");
  if (l1.size() != n) throw InvalidDimension("composite: l1 weight length mismatch");
  if (has_anchor() && (anchor_l1.size() != n || anchor.size() != n)) {
    throw InvalidDimension("composite: anchor length mismatch");
  }
  if (gram && gram->dim() != n) {
    throw InvalidDimension("composite: gram matrix dimensions mismatch");
  }
  if (prior) {
    if (prior->map.in_dim() != n || prior->target.size() != prior->map.out_dim()) {
      throw InvalidDimension("composite: prior dimensions mismatch");
    }
    require(prior->kappa >= 0.0, "composite: kappa must be >= 0");
  }
  for (Index i = 0; i < n; ++i) {
    require(l1[i] >= 0.0 && std::isfinite(l1[i]), "composite: l1 weights must be >= 0");
    if (has_anchor()) {
      require(anchor_l1[i] >= 0.0 && std::isfinite(anchor_l1[i]),
              "composite: anchor weights must be >= 0");
    }
  }
}

GramColumns::GramColumns(LinearOperator op, std::optional<LinearOperator> prior_map, double kappa)
    : op_(std::move(op)),
      prior_map_(std::move(prior_map)),
      kappa_(kappa),
      cols_(static_cast<std::size_t>(op_.in_dim())),
      have_(cols_.size(), 0) {
  if (prior_map_ && prior_map_->in_dim() != op_.in_dim()) {
    throw InvalidDimension("gram columns: prior map dimension mismatch");
  }
}

const Vector& GramColumns::col(Index i) {
  const auto k = static_cast<std::size_t>(i);
  if (!have_[k]) {
    Vector c;
    if (const Matrix* a = op_.dense()) {
      c = a->transpose() * a->col(i);
    } else {
      Vector e = Vector::Zero(op_.in_dim());
      e[i] = 1.0;
      c = op_.adjoint(op_.apply(e));
    }
    if (prior_map_ && kappa_ != 0.0) {
      if (prior_map_->is_identity()) {
        c[i] += kappa_;
      } else {
        Vector e = Vector::Zero(op_.in_dim());
        e[i] = 1.0;
        c += kappa_ * prior_map_->adjoint(prior_map_->apply(e));
      }
    }
    cols_[k] = std::move(c);
    have_[k] = 1;
  }
  return cols_[k];
}

double estimate_lipschitz(const LinearOperator& op, int iters, Rng& rng) {
  require(iters >= 1, "estimate_lipschitz: iters must be >= 1");
  return power_iteration([&](const Vector& v) { return op.adjoint(op.apply(v)); }, op.in_dim(),
                         iters, rng);
}

double soft_threshold(double v, double t) {
  return sign(v) * std::max(std::abs(v) - t, 0.0);
}

double prox_two_anchor(double v, double step, double a, double b, double d) {
  const double lo = std::min(0.0, d);
  const double hi = std::max(0.0, d);
  const double outer = step * (a + b);
  if (v - outer > hi) return v - outer;
  if (v + outer < lo) return v + outer;
  if (lo < hi) {
    // Between the kinks the slope is a - b (d > 0) or b - a (d < 0).
    const double mid_slope = d > 0.0 ? a - b : b - a;
    const double z = v - step * mid_slope;
    if (z > lo && z < hi) return z;
  }
  auto cost = [&](double z) {
    return (z - v) * (z - v) / (2.0 * step) + a * std::abs(z) + b * std::abs(z - d);
  };
  return cost(lo) <= cost(hi) ? lo : hi;
}

double composite_objective(const CompositeProblem& p, const Vector& z) {
  const SmoothPart smooth{p};
  return smooth.value(smooth.images(z)) + penalty(p, z);
}

double composite_kkt_violation(const CompositeProblem& p, const Vector& z) {
  const SmoothPart smooth{p};
  const Vector g = smooth.gradient(smooth.images(z));
  double worst = 0.0;
  for (Index i = 0; i < z.size(); ++i) {
    const double a = p.l1[i];
    const double b = p.has_anchor() ? p.anchor_l1[i] : 0.0;
    const double d = p.has_anchor() ? p.anchor[i] : 0.0;
    double v = 0.0;
    if (is_free(p, z, i)) {
      v = std::abs(g[i] + free_slope(p, z, i));
    } else if (z[i] == 0.0 && (b == 0.0 || d == 0.0)) {
      v = std::max(0.0, std::abs(g[i]) - a - (d == 0.0 ? b : 0.0));
    } else if (z[i] == 0.0) {
      v = std::max(0.0, std::abs(g[i] + b * sign(-d)) - a);
    } else {
      // z[i] == d != 0
      v = std::max(0.0, std::abs(g[i] + a * sign(d)) - b);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

SolveResult solve_composite(const CompositeProblem& p, const SolverSettings& s) {
  return solve_composite(p, s, Vector::Zero(p.dim()));
}

namespace {

// Columns of the smooth part's Hessian H = 2 (A^T A + kappa B^T B).
class HessianColumns {
 public:
  explicit HessianColumns(const CompositeProblem& p)
      : shared_(p.gram),
        cols_(static_cast<std::size_t>(p.dim())),
        have_(cols_.size(), 0) {
    if (!shared_) {
      std::optional<LinearOperator> map;
      double kappa = 0.0;
      if (p.prior && p.prior->kappa != 0.0) {
        map = p.prior->map;
        kappa = p.prior->kappa;
      }
      shared_ = std::make_shared<GramColumns>(p.op, map, kappa);
    }
  }

  const Vector& col(Index i) {
    const auto k = static_cast<std::size_t>(i);
    if (!have_[k]) {
      cols_[k] = 2.0 * shared_->col(i);
      have_[k] = 1;
    }
    return cols_[k];
  }

 private:
  std::shared_ptr<GramColumns> shared_;
  std::vector<Vector> cols_;
  std::vector<char> have_;
};

struct Piecewise {
  const CompositeProblem& p;

  double a(Index i) const { return p.l1[i]; }
  double b(Index i) const { return p.has_anchor() ? p.anchor_l1[i] : 0.0; }
  double d(Index i) const { return p.has_anchor() ? p.anchor[i] : 0.0; }

  double value(Index i, double v) const { return a(i) * std::abs(v) + b(i) * std::abs(v - d(i)); }

  bool at_kink(Index i, double v) const {
    return (a(i) > 0.0 && v == 0.0) || (b(i) > 0.0 && v == d(i));
  }

  // Slope of the piece containing v, or of the piece on side `dir` if v is a kink.
  double slope(Index i, double v, int dir) const {
    const auto sgn = [dir](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : double(dir)); };
    return a(i) * sgn(v) + b(i) * sgn(v - d(i));
  }

  int kinks(Index i, double out[2]) const {
    int k = 0;
    if (a(i) > 0.0) out[k++] = 0.0;
    if (b(i) > 0.0 && !(k == 1 && d(i) == 0.0)) out[k++] = d(i);
    return k;
  }
};

// Cholesky factor L L^T = H_FF of the Hessian restricted to a free set,
// updated as coordinates join and leave.
class FreeSetFactor {
 public:
  explicit FreeSetFactor(Index capacity) : l_(Matrix::Zero(capacity, capacity)) {}

  const std::vector<Index>& members() const { return members_; }
  bool contains(Index i) const {
    return std::find(members_.begin(), members_.end(), i) != members_.end();
  }
  Index size() const { return static_cast<Index>(members_.size()); }

  // False (and no change) if the column is numerically dependent.
  bool add(Index i, HessianColumns& hess) {
    const Index s = size();
    if (s == l_.rows()) return false;
    const Vector& col = hess.col(i);
    Vector row(s);
    for (Index r = 0; r < s; ++r) row[r] = col[members_[static_cast<std::size_t>(r)]];
    if (s > 0) l_.topLeftCorner(s, s).triangularView<Eigen::Lower>().solveInPlace(row);
    const double pivot = col[i] - row.squaredNorm();
    if (!(pivot > kPivotTol * col[i])) return false;
    l_.row(s).head(s) = row.transpose();
    l_(s, s) = std::sqrt(pivot);
    members_.push_back(i);
    return true;
  }

  void remove(Index i) {
    const auto it = std::find(members_.begin(), members_.end(), i);
    const auto k = static_cast<Index>(it - members_.begin());
    const Index s = size();
    for (Index r = k; r + 1 < s; ++r) l_.row(r).head(r + 2) = l_.row(r + 1).head(r + 2);
    // Rows k.. now carry one entry above the diagonal; rotate it away.
    for (Index r = k; r + 1 < s; ++r) {
      const double a = l_(r, r);
      const double b = l_(r, r + 1);
      const double h = std::hypot(a, b);
      const double c = a / h;
      const double sn = b / h;
      for (Index q = r; q + 1 < s; ++q) {
        const double x = l_(q, r);
        const double y = l_(q, r + 1);
        l_(q, r) = c * x + sn * y;
        l_(q, r + 1) = -sn * x + c * y;
      }
    }
    l_.row(s - 1).setZero();
    l_.col(s - 1).setZero();
    members_.erase(it);
  }

  Vector solve(const Vector& rhs) const {
    const Index s = size();
    Vector x = rhs;
    const auto l = l_.topLeftCorner(s, s);
    l.triangularView<Eigen::Lower>().solveInPlace(x);
    l.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  void clear() {
    l_.topLeftCorner(size(), size()).setZero();
    members_.clear();
  }

 private:
  static constexpr double kPivotTol = 1e-10;
  Matrix l_;
  std::vector<Index> members_;
};

// Exact minimizer for moderate dimensions: an active-set method over the
// linear pieces of the penalty (feature-sign search generalized to several
// kinks per coordinate). Each step solves the stationarity system on the
// free coordinates and line-searches over the kinks crossed on the way.
// Returns nothing if it cannot certify its answer.
std::optional<SolveResult> active_set_solve(const CompositeProblem& p, const Vector& start,
                                            double kkt_tol) {
  const Index n = p.dim();
  HessianColumns hess(p);
  const Piecewise pw{p};
  Vector h = 2.0 * p.op.adjoint(p.y);
  if (p.prior && p.prior->kappa != 0.0) {
    h += 2.0 * p.prior->kappa * p.prior->map.adjoint(p.prior->target);
  }
  const double inner_tol =
      std::max(1e-3 * kkt_tol, 1e-14 * std::max(h.cwiseAbs().maxCoeff(), 1.0));

  // A start with more free coordinates than the Hessian's rank allows
  // cannot be a minimizer's support (and would make the first free-set
  // solve singular), so begin from zero instead.
  const Index rank_bound =
      (p.prior && p.prior->kappa != 0.0) ? n : std::min(n, p.op.out_dim());
  // Oversized starts keep only their largest entries.
  Vector z = start;
  std::vector<Index> nonzero;
  for (Index i = 0; i < n; ++i) {
    if (!pw.at_kink(i, z[i])) nonzero.push_back(i);
  }
  const Index keep = rank_bound * 3 / 4;
  if (static_cast<Index>(nonzero.size()) > rank_bound) {
    std::nth_element(nonzero.begin(), nonzero.begin() + keep, nonzero.end(),
                     [&](Index a, Index b) { return std::abs(z[a]) > std::abs(z[b]); });
    for (auto it = nonzero.begin() + keep; it != nonzero.end(); ++it) {
      if (pw.a(*it) > 0.0) z[*it] = 0.0;
      else if (pw.b(*it) > 0.0) z[*it] = pw.d(*it);
    }
  }

  std::vector<char> is_free(static_cast<std::size_t>(n));
  std::vector<signed char> side(static_cast<std::size_t>(n), 1);
  for (Index i = 0; i < n; ++i) is_free[static_cast<std::size_t>(i)] = !pw.at_kink(i, z[i]);

  FreeSetFactor factor(rank_bound);
  bool factor_ok = false;
  const auto rebuild = [&] {
    factor.clear();
    factor_ok = true;
    for (Index i = 0; i < n && factor_ok; ++i) {
      if (is_free[static_cast<std::size_t>(i)]) factor_ok = factor.add(i, hess);
    }
  };
  rebuild();

  std::vector<Index> free_idx;
  std::vector<double> breakpoints;
  const int max_steps = static_cast<int>(10 * n + 100);
  int steps = 0;
  bool optimal = false;
  // The gradient comes from cached Hessian columns when A is an explicit
  // matrix, and from running residuals through the fast operators otherwise.
  const bool via_residual = p.op.dense() == nullptr;
  const SmoothPart smooth{p};
  SmoothPart::Images img;
  int since_refresh = 0;
  if (via_residual) img = smooth.images(z);
  const auto gradient = [&] {
    if (via_residual) return smooth.gradient(img);
    Vector g = -h;
    for (Index i = 0; i < n; ++i) {
      if (z[i] != 0.0) g += z[i] * hess.col(i);
    }
    return g;
  };
  Vector moved;

  // Best point on z + t delta (t <= t_max) for the objective, which is convex
  // in t: walk the kinks crossed in order and stop at the first rise.
  const auto line_search = [&](const Vector& g, const Vector& delta, double curv,
                               double t_max, double& best_t) {
    const auto nf = static_cast<Index>(free_idx.size());
    double g_delta = 0.0;
    for (Index c = 0; c < nf; ++c) g_delta += g[free_idx[static_cast<std::size_t>(c)]] * delta[c];
    const auto change = [&](double t) {
      double v = t * g_delta + 0.5 * t * t * curv;
      for (Index c = 0; c < nf; ++c) {
        const Index i = free_idx[static_cast<std::size_t>(c)];
        v += pw.value(i, z[i] + t * delta[c]) - pw.value(i, z[i]);
      }
      return v;
    };
    breakpoints.clear();
    for (Index c = 0; c < nf; ++c) {
      if (delta[c] == 0.0) continue;
      const Index i = free_idx[static_cast<std::size_t>(c)];
      double kinks[2];
      const int nk = pw.kinks(i, kinks);
      for (int k = 0; k < nk; ++k) {
        const double t = (kinks[k] - z[i]) / delta[c];
        if (t > 0.0 && t < t_max) breakpoints.push_back(t);
      }
    }
    std::sort(breakpoints.begin(), breakpoints.end());
    if (std::isfinite(t_max)) breakpoints.push_back(t_max);
    best_t = 0.0;
    double best = 0.0;
    for (double t : breakpoints) {
      const double v = change(t);
      if (!(v < best)) break;
      best = v;
      best_t = t;
    }
    return best < 0.0;
  };

  // Moves the free coordinates to z + t delta, snapping to kinks reached
  // exactly. True if any coordinate landed on a kink.
  const auto advance = [&](const Vector& delta, double t) {
    const auto nf = static_cast<Index>(free_idx.size());
    bool left_free = false;
    if (via_residual) moved = Vector::Zero(n);
    for (Index c = 0; c < nf; ++c) {
      const Index i = free_idx[static_cast<std::size_t>(c)];
      const double d = delta[c];
      double next = z[i] + t * d;
      double kinks[2];
      const int nk = pw.kinks(i, kinks);
      for (int j = 0; j < nk; ++j) {
        if (d != 0.0 && (kinks[j] - z[i]) / d == t) next = kinks[j];
      }
      if (via_residual) moved[i] = next - z[i];
      z[i] = next;
      const auto k = static_cast<std::size_t>(i);
      side[k] = 1;
      if (pw.at_kink(i, z[i])) {
        is_free[k] = 0;
        if (factor_ok && factor.contains(i)) factor.remove(i);
        left_free = true;
      }
    }
    if (via_residual) {
      if (++since_refresh >= kResidualRefresh) {
        img = smooth.images(z);
        since_refresh = 0;
      } else {
        const SmoothPart::Images step_img = smooth.images(moved);
        img.az += step_img.az;
        if (p.prior) img.bz += step_img.bz;
      }
    }
    return left_free;
  };

  // Releasing j when the free set already spans the Hessian's range opens a
  // null direction: the smooth part stays flat while the penalty keeps
  // falling, so follow it until some coordinate reaches a kink.
  const auto null_step = [&](const Vector& g, Index j) {
    const Vector& col = hess.col(j);
    const Index s = factor.size();
    Vector hj(s);
    for (Index r = 0; r < s; ++r) hj[r] = col[factor.members()[static_cast<std::size_t>(r)]];
    const double dir = side[static_cast<std::size_t>(j)];
    free_idx = factor.members();
    free_idx.push_back(j);
    Vector delta(s + 1);
    delta.head(s) = -dir * factor.solve(hj);
    delta[s] = dir;
    const double curv = std::max(0.0, col[j] + delta.head(s).dot(hj) * dir);
    double t = 0.0;
    if (!line_search(g, delta, curv, std::numeric_limits<double>::infinity(), t)) return false;
    advance(delta, t);
    if (is_free[static_cast<std::size_t>(j)]) factor_ok = factor.add(j, hess);
    if (!factor_ok) rebuild();
    return true;
  };

  for (; steps < max_steps; ++steps) {
    const Vector g = gradient();

    double worst_free = 0.0;
    for (Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      if (is_free[k]) {
        worst_free = std::max(worst_free, std::abs(g[i] + pw.slope(i, z[i], side[k])));
      }
    }
    if (worst_free <= inner_tol) {
      Index release = -1;
      double worst = inner_tol;
      for (Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (is_free[k]) continue;
        const double right = g[i] + pw.slope(i, z[i], 1);
        const double left = g[i] + pw.slope(i, z[i], -1);
        if (-right > worst) {
          worst = -right;
          release = i;
          side[k] = 1;
        } else if (left > worst) {
          worst = left;
          release = i;
          side[k] = -1;
        }
      }
      if (release < 0) {
        optimal = true;
        break;
      }
      is_free[static_cast<std::size_t>(release)] = 1;
      if (factor_ok && !factor.add(release, hess)) {
        if (null_step(g, release)) continue;
        factor_ok = false;
      }
    }

    // Newton step on the free set.
    if (factor_ok) {
      free_idx = factor.members();
    } else {
      free_idx.clear();
      for (Index i = 0; i < n; ++i) {
        if (is_free[static_cast<std::size_t>(i)]) free_idx.push_back(i);
      }
    }
    const auto nf = static_cast<Index>(free_idx.size());
    Vector rhs(nf);
    for (Index c = 0; c < nf; ++c) {
      const Index i = free_idx[static_cast<std::size_t>(c)];
      rhs[c] = -(g[i] + pw.slope(i, z[i], side[static_cast<std::size_t>(i)]));
    }
    Vector delta;
    double curv = 0.0;
    if (factor_ok) {
      delta = factor.solve(rhs);
      curv = delta.dot(rhs);
    } else {
      // Singular on this free set: take a proximal Newton step instead.
      Matrix hff(nf, nf);
      for (Index c = 0; c < nf; ++c) {
        const Vector& col = hess.col(free_idx[static_cast<std::size_t>(c)]);
        for (Index r = 0; r < nf; ++r) hff(r, c) = col[free_idx[static_cast<std::size_t>(r)]];
      }
      const double dmax = nf > 0 ? hff.diagonal().maxCoeff() : 0.0;
      double ridge = 1e-10 * std::max(dmax, 1e-300);
      Eigen::LDLT<Matrix> ldlt(hff + ridge * Matrix::Identity(nf, nf));
      while ((ldlt.info() != Eigen::Success || !ldlt.isPositive()) && ridge < dmax) {
        ridge *= 100.0;
        ldlt.compute(hff + ridge * Matrix::Identity(nf, nf));
      }
      delta = ldlt.solve(rhs);
      curv = delta.dot(hff * delta);
    }

    double best_t = 0.0;
    if (!line_search(g, delta, curv, 1.0, best_t)) break;  // no descent left at working precision
    if (advance(delta, best_t) && !factor_ok) rebuild();
  }

  if (!optimal || composite_kkt_violation(p, z) > kkt_tol) return std::nullopt;
  SolveResult result;
  result.status = SolveStatus::converged;
  result.iterations = steps;
  result.objective = composite_objective(p, z);
  result.z = std::move(z);
  return result;
}

SolveResult proximal_gradient(const CompositeProblem& p, const SolverSettings& s,
                              const Vector& warm_start, bool until_certified = false) {
  const Index n = p.dim();
  const SmoothPart smooth{p};
  double lip = 0.0;
  if (p.lipschitz) {
    lip = *p.lipschitz;
  } else {
    Rng rng(kPowerSeed);
    lip = power_iteration([&](const Vector& v) -> Vector { return 0.5 * smooth.hessian(v); }, n,
                          s.power_iters, rng);
  }

  SolveResult result;
  if (lip <= 0.0) {
    // No curvature: minimize the separable penalty alone.
    result.z = Vector::Zero(n);
    if (p.has_anchor()) {
      for (Index i = 0; i < n; ++i) {
        if (p.anchor_l1[i] > p.l1[i]) result.z[i] = p.anchor[i];
      }
    }
    result.objective = composite_objective(p, result.z);
    return result;
  }

  double step = 1.0 / (kStepMargin * 2.0 * lip);
  Vector z = warm_start;
  auto z_img = smooth.images(z);
  double f_z = smooth.value(z_img) + penalty(p, z);

  Vector v = z;
  auto v_img = z_img;
  double t = 1.0;
  int stable = 0;
  result.status = SolveStatus::uncertified;
  int iter = 0;

  // Once the sign pattern settles, the exact minimizer on that pattern is a
  // linear solve away. Try it and stop if it certifies.
  const double kkt_tol = 1e-6 * penalty_scale(p);
  std::vector<signed char> pattern, next_pattern;
  sign_pattern(p, z, pattern);
  int settled = 0;
  int next_attempt = kFirstPolishAttempt;
  bool certified = false;
  for (iter = 1; iter <= s.max_iters; ++iter) {
    Vector z_next = prox(p, v - step * smooth.gradient(v_img), step);
    auto next_img = smooth.images(z_next);
    double f_next = smooth.value(next_img) + penalty(p, z_next);

    bool restarted = false;
    if (f_next > f_z) {
      // Momentum overshot: fall back to a plain proximal step from z.
      restarted = true;
      const Vector g = smooth.gradient(z_img);
      for (;;) {
        z_next = prox(p, z - step * g, step);
        next_img = smooth.images(z_next);
        f_next = smooth.value(next_img) + penalty(p, z_next);
        if (f_next <= f_z || step < 1e-300) break;
        step *= 0.5;  // only reached if the curvature estimate was too low
      }
      if (f_next > f_z) {
        z_next = z;
        next_img = z_img;
        f_next = f_z;
      }
    }

    const double change = std::abs(f_z - f_next);
    const double scale = std::max(std::abs(f_next), std::numeric_limits<double>::min());
    stable = (change <= s.rel_tol * scale) ? stable + 1 : 0;

    // Gradient-based restart: the step direction disagrees with momentum.
    const bool gradient_restart = (v - z_next).dot(z_next - z) > 0.0;
    double momentum = 0.0;
    if (restarted || gradient_restart) {
      t = 1.0;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      momentum = (t - 1.0) / t_next;
      t = t_next;
    }
    v = z_next + momentum * (z_next - z);
    v_img.az = next_img.az + momentum * (next_img.az - z_img.az);
    if (p.prior) v_img.bz = next_img.bz + momentum * (next_img.bz - z_img.bz);

    const bool unchanged = (z_next == z);
    z = std::move(z_next);
    z_img = std::move(next_img);
    f_z = f_next;
    if (until_certified) {
      if (unchanged) break;
      if (iter % kKktCheckEvery == 0 && composite_kkt_violation(p, z) <= kkt_tol) {
        certified = true;
        result.status = SolveStatus::converged;
        break;
      }
    } else if (stable >= kStableIterations || unchanged) {
      result.status = SolveStatus::converged;
      break;
    }

    sign_pattern(p, z, next_pattern);
    settled = (next_pattern == pattern) ? settled + 1 : 0;
    std::swap(pattern, next_pattern);
    if (s.polish && kkt_tol > 0.0 && settled >= next_attempt) {
      Vector candidate = polish(p, smooth, z);
      if (composite_kkt_violation(p, candidate) <= kkt_tol) {
        z = std::move(candidate);
        certified = true;
        result.status = SolveStatus::converged;
        break;
      }
      next_attempt = 2 * settled;
    }
  }
  result.iterations = std::min(iter, s.max_iters);

  if (s.polish && !certified) z = polish(p, smooth, z);
  result.objective = composite_objective(p, z);
  result.z = std::move(z);
  return result;
}

}  // namespace

namespace {

SolveResult solve_by_cases(const CompositeProblem& p, const SolverSettings& s,
                           const Vector& warm_start, double kkt_tol) {
  const Index n = p.dim();
  Vector fallback_start = warm_start;
  if (p.prior && p.prior->kappa > 0.0 && kkt_tol > 0.0) {
    // The quadratic prior makes the objective strongly convex (for an
    // injective map), where proximal gradient converges linearly.
    SolveResult r = proximal_gradient(p, s, warm_start, true);
    if (composite_kkt_violation(p, r.z) <= kkt_tol) return r;
    fallback_start = std::move(r.z);
  }
  if (n <= s.exact_max_dim) {
    if (kkt_tol > 0.0) {
      Vector start = fallback_start;
      if (n > kSeedMinDim && start.isZero(0.0)) {
        // Large cold starts take one step per support change; a short run of
        // proximal gradient gets most of the support in place first.
        SolverSettings rough = s;
        rough.max_iters = std::min(s.max_iters, kSeedIters);
        rough.polish = false;
        start = proximal_gradient(p, rough, warm_start).z;
      }
      auto exact = active_set_solve(p, start, kkt_tol);
      if (exact) return std::move(*exact);
    }
  }
  return proximal_gradient(p, s, fallback_start, kkt_tol > 0.0);
}

}  // namespace

SolveResult solve_composite(const CompositeProblem& p, const SolverSettings& s,
                            const Vector& warm_start) {
  p.validate();
  s.validate();
  if (warm_start.size() != p.dim()) {
    throw InvalidDimension("composite: warm start length mismatch");
  }
  const double kkt_tol = 1e-6 * penalty_scale(p);
  SolveResult r = solve_by_cases(p, s, warm_start, kkt_tol);
  r.kkt_violation = composite_kkt_violation(p, r.z);
  // Without any l1 term the scale comes from the data instead.
  double tol = kkt_tol;
  if (tol == 0.0) {
    const Vector g0 = 2.0 * p.op.adjoint(p.y);
    tol = 1e-9 * std::max(1.0, g0.size() > 0 ? g0.cwiseAbs().maxCoeff() : 0.0);
  }
  r.status = r.kkt_violation <= tol ? SolveStatus::converged : SolveStatus::uncertified;
  return r;
}

CompositeProblem as_composite(const WeightedL1Problem& p) {
  p.validate();
  CompositeProblem c{p.op, p.y, std::nullopt, p.base_scale * p.weights, {}, {}, p.lipschitz,
                     p.gram};
  return c;
}

SolveResult solve_weighted_l1(const WeightedL1Problem& p, const SolverSettings& s) {
  return solve_composite(as_composite(p), s);
}

SolveResult solve_weighted_l1(const WeightedL1Problem& p, const SolverSettings& s,
                              const Vector& warm_start) {
  return solve_composite(as_composite(p), s, warm_start);
}

double weighted_l1_objective(const WeightedL1Problem& p, const Vector& z) {
  return composite_objective(as_composite(p), z);
}

double kkt_violation(const WeightedL1Problem& p, const Vector& z) {
  return composite_kkt_violation(as_composite(p), z);
}

double kkt_tolerance(const WeightedL1Problem& p) {
  return 1e-6 * p.base_scale * p.weights.maxCoeff();
}

void AnalysisL1Problem::validate() const {
  const Index n = op.in_dim();
  if (y.size() != op.out_dim()) throw InvalidDimension("analysis l1: measurement mismatch");
  if (l1.size() != n) throw InvalidDimension("analysis l1: l1 weight length mismatch");
  if (map.in_dim() != n || target.size() != map.out_dim()) {
    throw InvalidDimension("analysis l1: map dimensions mismatch");
  }
  require(kappa >= 0.0, "analysis l1: kappa must be >= 0");
}

double analysis_l1_objective(const AnalysisL1Problem& p, const Vector& z) {
  double v = (p.op.apply(z) - p.y).squaredNorm();
  v += p.l1.cwiseProduct(z.cwiseAbs()).sum();
  v += p.kappa * (p.map.apply(z) - p.target).lpNorm<1>();
  return v;
}

SolveResult solve_analysis_l1(const AnalysisL1Problem& p, const SolverSettings& s,
                              const Vector& warm_start) {
  p.validate();
  s.validate();
  const Index n = p.op.in_dim();
  if (warm_start.size() != n) throw InvalidDimension("analysis l1: warm start mismatch");

  Rng rng(kPowerSeed);
  const double lip_f = 2.0 * estimate_lipschitz(p.op, s.power_iters, rng) * kStepMargin;
  const double norm_b2 =
      std::max(estimate_lipschitz(p.map, s.power_iters, rng) * kStepMargin, 1e-300);
  // Condat-Vu step condition: 1/tau - sigma ||B||^2 >= L_f / 2.
  const double sigma = (lip_f > 0.0 ? lip_f : 1.0) / (2.0 * norm_b2);
  const double tau = 0.99 / (lip_f / 2.0 + sigma * norm_b2);

  Vector z = warm_start;
  Vector u = Vector::Zero(p.map.out_dim());
  SolveResult result;
  result.status = SolveStatus::uncertified;
  int stable = 0;
  int iter = 0;
  for (iter = 1; iter <= s.max_iters; ++iter) {
    const Vector grad = 2.0 * p.op.adjoint(p.op.apply(z) - p.y);
    const Vector w = z - tau * (grad + p.map.adjoint(u));
    Vector z_next(n);
    for (Index i = 0; i < n; ++i) z_next[i] = soft_threshold(w[i], tau * p.l1[i]);
    Vector u_next = u + sigma * p.map.apply(2.0 * z_next - z) - sigma * p.target;
    u_next = u_next.cwiseMax(-p.kappa).cwiseMin(p.kappa);

    const double dz = (z_next - z).norm();
    const double du = (u_next - u).norm();
    const bool small = dz <= s.rel_tol * std::max(1.0, z_next.norm()) &&
                       du <= s.rel_tol * std::max(1.0, u_next.norm());
    stable = small ? stable + 1 : 0;
    z = std::move(z_next);
    u = std::move(u_next);
    if (stable >= kStableIterations) {
      result.status = SolveStatus::converged;
      break;
    }
  }
  result.iterations = std::min(iter, s.max_iters);
  result.objective = analysis_l1_objective(p, z);
  result.z = std::move(z);
  return result;
}

}  // namespace rwl1df

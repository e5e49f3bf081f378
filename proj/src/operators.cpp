#include "rwl1df/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace rwl1df {

Rng substream(std::uint64_t master_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

LinearOperator::LinearOperator(Index in_dim, Index out_dim, Map apply, Map adjoint,
                               std::string name)
    : in_dim_(in_dim),
      out_dim_(out_dim),
      apply_(std::move(apply)),
      adjoint_(std::move(adjoint)),
      name_(std::move(name)) {
  if (in_dim < 0 || out_dim < 0) {
    throw InvalidDimension("LinearOperator: negative dimension");
  }
}

Vector LinearOperator::apply(const Vector& x) const {
  if (x.size() != in_dim_) {
    throw InvalidDimension(name_ + ": apply expects length " + std::to_string(in_dim_) +
                           ", got " + std::to_string(x.size()));
  }
  return apply_(x);
}

Vector LinearOperator::adjoint(const Vector& u) const {
  if (u.size() != out_dim_) {
    throw InvalidDimension(name_ + ": adjoint expects length " + std::to_string(out_dim_) +
                           ", got " + std::to_string(u.size()));
  }
  return adjoint_(u);
}

Matrix LinearOperator::materialize() const {
  Matrix m(out_dim_, in_dim_);
  Vector e = Vector::Zero(in_dim_);
  for (Index j = 0; j < in_dim_; ++j) {
    e[j] = 1.0;
    m.col(j) = apply_(e);
    e[j] = 0.0;
  }
  return m;
}

Matrix LinearOperator::gram() const {
  if (identity_) return Matrix::Identity(in_dim_, in_dim_);
  const Matrix m = dense_ ? Matrix() : materialize();
  const Matrix& a = dense_ ? *dense_ : m;
  Matrix g = Matrix::Zero(in_dim_, in_dim_);
  g.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  return g.selfadjointView<Eigen::Lower>();
}

LinearOperator LinearOperator::identity(Index n) {
  auto id = [](const Vector& v) { return v; };
  LinearOperator op(n, n, id, id, "identity");
  op.identity_ = true;
  return op;
}

LinearOperator LinearOperator::from_matrix(Matrix m, std::string name) {
  return from_shared(std::make_shared<const Matrix>(std::move(m)), std::move(name));
}

LinearOperator LinearOperator::from_shared(std::shared_ptr<const Matrix> shared,
                                           std::string name) {
  LinearOperator op(
      shared->cols(), shared->rows(),
      [shared](const Vector& x) -> Vector { return (*shared) * x; },
      [shared](const Vector& u) -> Vector { return shared->transpose() * u; },
      std::move(name));
  op.dense_ = shared;
  return op;
}

LinearOperator LinearOperator::diagonal(Vector d) {
  auto shared = std::make_shared<const Vector>(std::move(d));
  auto map = [shared](const Vector& x) -> Vector { return shared->cwiseProduct(x); };
  return LinearOperator(shared->size(), shared->size(), map, map, "diagonal");
}

LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner) {
  if (outer.in_dim() != inner.out_dim()) {
    throw InvalidDimension("compose: " + outer.name() + " expects " +
                           std::to_string(outer.in_dim()) + " inputs but " + inner.name() +
                           " produces " + std::to_string(inner.out_dim()));
  }
  if (inner.is_identity()) return outer;
  if (outer.is_identity()) return inner;
  return LinearOperator(
      inner.in_dim(), outer.out_dim(),
      [outer, inner](const Vector& x) { return outer.apply(inner.apply(x)); },
      [outer, inner](const Vector& u) { return inner.adjoint(outer.adjoint(u)); },
      outer.name() + "*" + inner.name());
}

LinearOperator restrict_rows(const LinearOperator& full, std::vector<Index> rows) {
  std::unordered_set<Index> seen;
  for (Index r : rows) {
    if (r < 0 || r >= full.out_dim()) {
      throw InvalidSubset("row index " + std::to_string(r) + " outside [0, " +
                          std::to_string(full.out_dim()) + ")");
    }
    if (!seen.insert(r).second) {
      throw InvalidSubset("duplicate row index " + std::to_string(r));
    }
  }
  auto shared = std::make_shared<const std::vector<Index>>(std::move(rows));
  const Index m = static_cast<Index>(shared->size());
  const Index n_out = full.out_dim();
  return LinearOperator(
      full.in_dim(), m,
      [full, shared, m](const Vector& x) {
        const Vector y = full.apply(x);
        Vector out(m);
        for (Index i = 0; i < m; ++i) out[i] = y[(*shared)[i]];
        return out;
      },
      [full, shared, m, n_out](const Vector& u) {
        Vector padded = Vector::Zero(n_out);
        for (Index i = 0; i < m; ++i) padded[(*shared)[i]] = u[i];
        return full.adjoint(padded);
      },
      "rows(" + full.name() + ")");
}

LinearOperator GaussianMatrix::as_operator() const {
  return LinearOperator::from_shared(entries, "gaussian");
}

GaussianMatrix gaussian_sensing(Index m, Index n, Rng& rng) {
  if (m <= 0 || n <= 0) {
    throw InvalidDimension("gaussian_sensing: dimensions must be positive (m=" +
                           std::to_string(m) + ", n=" + std::to_string(n) + ")");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(m, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) a(i, j) = normal(rng);
  }
  for (Index j = 0; j < n; ++j) {
    double norm = a.col(j).norm();
    // An exactly zero draw has probability zero; resample rather than divide.
    while (norm == 0.0) {
      for (Index i = 0; i < m; ++i) a(i, j) = normal(rng);
      norm = a.col(j).norm();
    }
    a.col(j) /= norm;
  }
  return GaussianMatrix{std::make_shared<const Matrix>(std::move(a))};
}

std::vector<Index> random_row_subset(Index n, Index m, Rng& rng) {
  if (m < 0 || m > n) {
    throw InvalidDimension("random_row_subset: cannot draw " + std::to_string(m) +
                           " rows from " + std::to_string(n));
  }
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  // Partial Fisher-Yates with explicit draws keeps the result independent of
  // the standard library's shuffle implementation.
  for (Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  all.resize(static_cast<std::size_t>(m));
  std::sort(all.begin(), all.end());
  return all;
}

double adjoint_mismatch(const LinearOperator& op, Rng& rng, int pairs) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    Vector x(op.in_dim());
    Vector u(op.out_dim());
    for (auto& v : x) v = normal(rng);
    for (auto& v : u) v = normal(rng);
    const Vector ax = op.apply(x);
    const Vector atu = op.adjoint(u);
    const double lhs = ax.dot(u);
    const double rhs = x.dot(atu);
    const double scale = std::max({ax.norm() * u.norm(), x.norm() * atu.norm(), 1e-300});
    worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

}  // namespace rwl1df

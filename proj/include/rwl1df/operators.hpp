#pragma once

#include "rwl1df/core.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rwl1df {

/// Matrix-free linear map R^in_dim -> R^out_dim with its adjoint.
///
/// Instances are immutable and cheap to copy (the callables share state);
/// apply() and adjoint() may be called concurrently.
class LinearOperator {
 public:
  using Map = std::function<Vector(const Vector&)>;

  LinearOperator(Index in_dim, Index out_dim, Map apply, Map adjoint,
                 std::string name = "operator");

  Index in_dim() const { return in_dim_; }
  Index out_dim() const { return out_dim_; }
  const std::string& name() const { return name_; }
  bool is_identity() const { return identity_; }

  Vector apply(const Vector& x) const;
  Vector adjoint(const Vector& u) const;

  /// Dense out_dim x in_dim matrix, built column by column from apply().
  Matrix materialize() const;

  /// A^T A (in_dim x in_dim).
  Matrix gram() const;

  /// Backing matrix for operators built from one, otherwise null.
  const Matrix* dense() const { return dense_.get(); }

  static LinearOperator identity(Index n);
  static LinearOperator from_matrix(Matrix m, std::string name = "matrix");
  static LinearOperator from_shared(std::shared_ptr<const Matrix> m, std::string name = "matrix");
  static LinearOperator diagonal(Vector d);

 private:
  Index in_dim_;
  Index out_dim_;
  Map apply_;
  Map adjoint_;
  std::string name_;
  bool identity_ = false;
  std::shared_ptr<const Matrix> dense_;
};

/// outer ∘ inner: x -> outer(inner(x)).
LinearOperator compose(const LinearOperator& outer, const LinearOperator& inner);

/// Restriction to the listed output rows of `full` (adjoint zero-pads).
LinearOperator restrict_rows(const LinearOperator& full, std::vector<Index> rows);

/// Dense sensing matrix with i.i.d. normal entries and unit-norm columns.
struct GaussianMatrix {
  std::shared_ptr<const Matrix> entries;

  Index rows() const { return entries->rows(); }
  Index cols() const { return entries->cols(); }
  LinearOperator as_operator() const;
};

GaussianMatrix gaussian_sensing(Index m, Index n, Rng& rng);

/// Uniformly random ordered subset of m distinct indices from [0, n).
std::vector<Index> random_row_subset(Index n, Index m, Rng& rng);

/// Largest |<Ax,u> - <x,A^T u>| / (|Ax||u| + |x||A^T u|) over random pairs.
double adjoint_mismatch(const LinearOperator& op, Rng& rng, int pairs);

}  // namespace rwl1df

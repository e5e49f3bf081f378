#pragma once

#include "rwl1df/core.hpp"
#include "rwl1df/operators.hpp"

#include <vector>

namespace rwl1df {

/// Fast real orthonormal noiselet transform of length n = 2^J.
///
/// The complex noiselet matrix T is built by the butterfly
///   T_1 = [1],  T_2N rows (2r, 2r+1) = [a T_N[r], b T_N[r]], [b T_N[r], a T_N[r]]
/// with a = (1-i)/2, b = (1+i)/2. The real transform returned here is
/// Re(T) + Im(T), which is orthogonal because Re(T)^T Im(T) = 0 for this family.
Vector noiselet_forward(const Vector& x);

/// Transpose (= inverse) of noiselet_forward.
Vector noiselet_inverse(const Vector& y);

/// Noiselet transform restricted to `row_subset`; the adjoint zero-pads and
/// applies the inverse transform.
LinearOperator noiselet_operator(Index n, std::vector<Index> row_subset);

/// Same with m rows drawn uniformly at random.
LinearOperator noiselet_operator(Index n, Index m, Rng& rng);

}  // namespace rwl1df

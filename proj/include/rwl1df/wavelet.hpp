#pragma once

#include "rwl1df/core.hpp"
#include "rwl1df/operators.hpp"

#include <span>

namespace rwl1df {

enum class WaveletDims { one, two };

/// Orthonormal periodic Daubechies DWT layout.
///
/// One-dimensional signals have `side` samples; two-dimensional signals are
/// side x side images flattened row-major. Coefficients use the usual Mallat
/// ordering: coarsest approximation first, finest details last (in 2-D the
/// approximation occupies the top-left block).
struct WaveletConfig {
  int taps = 4;
  int levels = 1;
  Index side = 0;
  WaveletDims dims = WaveletDims::one;

  Index size() const { return dims == WaveletDims::one ? side : side * side; }
  void validate() const;
};

/// Scaling (low-pass) filter for the Daubechies family with the given tap
/// count. Supported: 2 (Haar), 4, 6, 8, 10, 12, 16, 20.
std::span<const double> daubechies_filter(int taps);

CoefficientVector dwt_forward(const Vector& x, const WaveletConfig& cfg);
Vector dwt_inverse(const CoefficientVector& z, const WaveletConfig& cfg);

/// Convenience overloads for square images (cfg.dims must be two).
Matrix dwt_forward(const Matrix& image, const WaveletConfig& cfg);
Matrix dwt_inverse(const Matrix& coeffs, const WaveletConfig& cfg);

/// Synthesis operator W: coefficients -> signal. Its adjoint is dwt_forward.
LinearOperator dwt_synthesis_operator(const WaveletConfig& cfg);

}  // namespace rwl1df

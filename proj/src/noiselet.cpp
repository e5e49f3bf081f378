#include "rwl1df/noiselet.hpp"

#include <complex>
#include <string>

namespace rwl1df {
namespace {

using Complex = std::complex<double>;

const Complex kA{0.5, -0.5};
const Complex kB{0.5, 0.5};

void require_length(Index n) {
  if (!is_power_of_two(n)) {
    throw InvalidDimension("noiselet: length " + std::to_string(n) + " is not a power of two");
  }
}

// Bottom-up butterfly: blocks of size `block` hold T_block applied to their
// own segment; adjacent pairs merge into blocks of size 2*block.
std::vector<Complex> complex_forward(const Vector& x) {
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<Complex> cur(n);
  std::vector<Complex> next(n);
  for (std::size_t i = 0; i < n; ++i) cur[i] = x[static_cast<Index>(i)];
  for (std::size_t block = 1; block < n; block *= 2) {
    for (std::size_t base = 0; base < n; base += 2 * block) {
      const Complex* lo = &cur[base];
      const Complex* hi = &cur[base + block];
      Complex* out = &next[base];
      for (std::size_t r = 0; r < block; ++r) {
        out[2 * r] = kA * lo[r] + kB * hi[r];
        out[2 * r + 1] = kB * lo[r] + kA * hi[r];
      }
    }
    cur.swap(next);
  }
  return cur;
}

// T^H u, top-down mirror of complex_forward.
std::vector<Complex> complex_adjoint(const Vector& u) {
  const auto n = static_cast<std::size_t>(u.size());
  std::vector<Complex> cur(n);
  std::vector<Complex> next(n);
  for (std::size_t i = 0; i < n; ++i) cur[i] = u[static_cast<Index>(i)];
  for (std::size_t block = n / 2; block >= 1; block /= 2) {
    for (std::size_t base = 0; base < n; base += 2 * block) {
      const Complex* in = &cur[base];
      Complex* lo = &next[base];
      Complex* hi = &next[base + block];
      for (std::size_t r = 0; r < block; ++r) {
        const Complex even = in[2 * r];
        const Complex odd = in[2 * r + 1];
        lo[r] = kB * even + kA * odd;
        hi[r] = kA * even + kB * odd;
      }
    }
    cur.swap(next);
  }
  return cur;
}

}  // namespace

Vector noiselet_forward(const Vector& x) {
  require_length(x.size());
  const auto c = complex_forward(x);
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    out[i] = c[static_cast<std::size_t>(i)].real() + c[static_cast<std::size_t>(i)].imag();
  }
  return out;
}

Vector noiselet_inverse(const Vector& y) {
  require_length(y.size());
  // (Re T + Im T)^T u = Re(T^H u) - Im(T^H u) for real u.
  const auto c = complex_adjoint(y);
  Vector out(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    out[i] = c[static_cast<std::size_t>(i)].real() - c[static_cast<std::size_t>(i)].imag();
  }
  return out;
}

LinearOperator noiselet_operator(Index n, std::vector<Index> row_subset) {
  require_length(n);
  LinearOperator full(
      n, n, [](const Vector& x) { return noiselet_forward(x); },
      [](const Vector& y) { return noiselet_inverse(y); }, "noiselet");
  return restrict_rows(full, std::move(row_subset));
}

LinearOperator noiselet_operator(Index n, Index m, Rng& rng) {
  require_length(n);
  return noiselet_operator(n, random_row_subset(n, m, rng));
}

}  // namespace rwl1df

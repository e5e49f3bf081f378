#include "rwl1df/wavelet.hpp"

#include <array>
#include <string>
#include <vector>

namespace rwl1df {
namespace {

constexpr std::array<double, 2> kDb2 = {0.70710678118654757, 0.70710678118654757};
constexpr std::array<double, 4> kDb4 = {0.48296291314453416, 0.83651630373780794,
                                        0.22414386804201339, -0.12940952255126037};
constexpr std::array<double, 6> kDb6 = {0.33267055295008263,  0.80689150931109255,
                                        0.45987750211849154,  -0.13501102001025458,
                                        -0.085441273882026658, 0.035226291885709533};
constexpr std::array<double, 8> kDb8 = {
    0.23037781330889651,  0.71484657055291567, 0.63088076792985892,  -0.027983769416859854,
    -0.18703481171909309, 0.030841381835560764, 0.032883011666885197, -0.010597401785069032};
constexpr std::array<double, 10> kDb10 = {
    0.16010239797419293,   0.60382926979718965,  0.72430852843777294,
    0.13842814590132074,   -0.24229488706638203, -0.032244869584638375,
    0.077571493840045719,  -0.0062414902127982744, -0.012580751999081999,
    0.0033357252854737712};
constexpr std::array<double, 12> kDb12 = {
    0.11154074335010947,  0.49462389039845306,   0.75113390802109536,
    0.31525035170919763,  -0.22626469396543983,  -0.12976686756726194,
    0.097501605587323043, 0.027522865530305727,  -0.03158203931748603,
    0.00055384220116149613, 0.0047772575109455108, -0.0010773010853084796};
constexpr std::array<double, 16> kDb16 = {
    0.054415842243104008,    0.31287159091429995,     0.67563073629728976,
    0.58535468365420673,     -0.015829105256349306,   -0.28401554296154691,
    0.00047248457391328279,  0.12874742662047847,     -0.017369301001807547,
    -0.044088253930794755,   0.013981027917398282,    0.0087460940474057766,
    -0.0048703529934515741,  -0.00039174037337694705, 0.00067544940645056933,
    -0.00011747678412476953};
constexpr std::array<double, 20> kDb20 = {
    0.026670057900555554,   0.1881768000776915,      0.52720118893172563,
    0.68845903945360354,    0.28117234366057747,     -0.24984642432731538,
    -0.19594627437737705,   0.12736934033579325,     0.093057364603572348,
    -0.071394147166397082,  -0.029457536821875813,   0.033212674059341002,
    0.0036065535669561697,  -0.010733175483330575,   0.0013953517470529011,
    0.0019924052951850561,  -0.00068585669495971162, -0.00011646685512928545,
    9.3588670320069592e-05, -1.3264202894521244e-05};

// One analysis level on the first n entries of buf (periodic wrap).
void analysis_level(std::vector<double>& buf, std::size_t n, std::span<const double> h,
                    std::vector<double>& scratch) {
  const std::size_t half = n / 2;
  const std::size_t taps = h.size();
  scratch.assign(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    double approx = 0.0;
    double detail = 0.0;
    for (std::size_t j = 0; j < taps; ++j) {
      const double v = buf[(2 * k + j) % n];
      approx += h[j] * v;
      // g[j] = (-1)^j h[taps-1-j]
      const double g = (j % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - j];
      detail += g * v;
    }
    scratch[k] = approx;
    scratch[half + k] = detail;
  }
  std::copy(scratch.begin(), scratch.end(), buf.begin());
}

void synthesis_level(std::vector<double>& buf, std::size_t n, std::span<const double> h,
                     std::vector<double>& scratch) {
  const std::size_t half = n / 2;
  const std::size_t taps = h.size();
  scratch.assign(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    const double approx = buf[k];
    const double detail = buf[half + k];
    for (std::size_t j = 0; j < taps; ++j) {
      const double g = (j % 2 == 0 ? 1.0 : -1.0) * h[taps - 1 - j];
      scratch[(2 * k + j) % n] += h[j] * approx + g * detail;
    }
  }
  std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n), buf.begin());
}

void check_length(Index got, const WaveletConfig& cfg) {
  if (got != cfg.size()) {
    throw InvalidConfig("wavelet: expected " + std::to_string(cfg.size()) +
                        " samples, got " + std::to_string(got));
  }
}

// Applies `level` to every row, then every column, of the top-left
// len x len block of a row-major side x side image.
template <class LevelFn>
void separable_pass(Vector& img, Index side, std::size_t len, LevelFn level) {
  std::vector<double> line(len);
  std::vector<double> scratch;
  for (std::size_t r = 0; r < len; ++r) {
    for (std::size_t c = 0; c < len; ++c) line[c] = img[static_cast<Index>(r) * side + c];
    level(line, len, scratch);
    for (std::size_t c = 0; c < len; ++c) img[static_cast<Index>(r) * side + c] = line[c];
  }
  for (std::size_t c = 0; c < len; ++c) {
    for (std::size_t r = 0; r < len; ++r) line[r] = img[static_cast<Index>(r) * side + c];
    level(line, len, scratch);
    for (std::size_t r = 0; r < len; ++r) img[static_cast<Index>(r) * side + c] = line[r];
  }
}

}  // namespace

std::span<const double> daubechies_filter(int taps) {
  switch (taps) {
    case 2: return kDb2;
    case 4: return kDb4;
    case 6: return kDb6;
    case 8: return kDb8;
    case 10: return kDb10;
    case 12: return kDb12;
    case 16: return kDb16;
    case 20: return kDb20;
    default:
      throw InvalidConfig("unsupported Daubechies tap count " + std::to_string(taps));
  }
}

void WaveletConfig::validate() const {
  daubechies_filter(taps);
  if (levels < 0) throw InvalidConfig("wavelet: negative level count");
  if (side <= 0 || !is_power_of_two(side)) {
    throw InvalidConfig("wavelet: side length " + std::to_string(side) +
                        " is not a power of two");
  }
  if (levels >= 63 || side % (Index{1} << levels) != 0) {
    throw InvalidConfig("wavelet: length " + std::to_string(side) +
                        " not divisible by 2^" + std::to_string(levels));
  }
}

CoefficientVector dwt_forward(const Vector& x, const WaveletConfig& cfg) {
  cfg.validate();
  check_length(x.size(), cfg);
  const auto h = daubechies_filter(cfg.taps);
  const auto side = static_cast<std::size_t>(cfg.side);
  auto level = [h](std::vector<double>& buf, std::size_t n, std::vector<double>& scratch) {
    analysis_level(buf, n, h, scratch);
  };
  if (cfg.dims == WaveletDims::one) {
    std::vector<double> buf(x.data(), x.data() + x.size());
    std::vector<double> scratch;
    std::size_t len = side;
    for (int l = 0; l < cfg.levels; ++l, len /= 2) level(buf, len, scratch);
    return Eigen::Map<const Vector>(buf.data(), x.size());
  }
  Vector img = x;
  std::size_t len = side;
  for (int l = 0; l < cfg.levels; ++l, len /= 2) separable_pass(img, cfg.side, len, level);
  return img;
}

Vector dwt_inverse(const CoefficientVector& z, const WaveletConfig& cfg) {
  cfg.validate();
  check_length(z.size(), cfg);
  const auto h = daubechies_filter(cfg.taps);
  const auto side = static_cast<std::size_t>(cfg.side);
  auto level = [h](std::vector<double>& buf, std::size_t n, std::vector<double>& scratch) {
    synthesis_level(buf, n, h, scratch);
  };
  if (cfg.dims == WaveletDims::one) {
    std::vector<double> buf(z.data(), z.data() + z.size());
    std::vector<double> scratch;
    for (int l = cfg.levels - 1; l >= 0; --l) level(buf, side >> l, scratch);
    return Eigen::Map<const Vector>(buf.data(), z.size());
  }
  Vector img = z;
  for (int l = cfg.levels - 1; l >= 0; --l) separable_pass(img, cfg.side, side >> l, level);
  return img;
}

namespace {

Vector flatten_row_major(const Matrix& m) {
  Vector v(m.size());
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) v[r * m.cols() + c] = m(r, c);
  }
  return v;
}

Matrix unflatten_row_major(const Vector& v, Index side) {
  Matrix m(side, side);
  for (Index r = 0; r < side; ++r) {
    for (Index c = 0; c < side; ++c) m(r, c) = v[r * side + c];
  }
  return m;
}

void require_square_2d(const Matrix& m, const WaveletConfig& cfg) {
  if (cfg.dims != WaveletDims::two) throw InvalidConfig("wavelet: matrix input needs 2-D config");
  if (m.rows() != cfg.side || m.cols() != cfg.side) {
    throw InvalidConfig("wavelet: expected " + std::to_string(cfg.side) + "x" +
                        std::to_string(cfg.side) + " image");
  }
}

}  // namespace

Matrix dwt_forward(const Matrix& image, const WaveletConfig& cfg) {
  require_square_2d(image, cfg);
  return unflatten_row_major(dwt_forward(flatten_row_major(image), cfg), cfg.side);
}

Matrix dwt_inverse(const Matrix& coeffs, const WaveletConfig& cfg) {
  require_square_2d(coeffs, cfg);
  return unflatten_row_major(dwt_inverse(flatten_row_major(coeffs), cfg), cfg.side);
}

LinearOperator dwt_synthesis_operator(const WaveletConfig& cfg) {
  cfg.validate();
  return LinearOperator(
      cfg.size(), cfg.size(), [cfg](const Vector& z) { return dwt_inverse(z, cfg); },
      [cfg](const Vector& x) { return dwt_forward(x, cfg); }, "dwt");
}

}  // namespace rwl1df

#include <cmath>
#include <limits>

#include "nfpipe/kernels.hpp"

namespace nfpipe::kernels {

namespace {

void sum_sumsq_scalar(const float* x, std::size_t n, double& sum, double& sumsq) {
  double s = 0.0, q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    s += v;
    q += v * v;
  }
  sum += s;
  sumsq += q;
}

void affine_scalar(float* dst, const float* src, std::size_t n, float scale,
                   float bias) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = std::fmaf(src[i], scale, bias);
}

void accumulate_scalar(double* acc, const float* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(src[i]);
}

void mean_finalize_scalar(float* dst, const double* acc, std::size_t n,
                          double count) {
  for (std::size_t i = 0; i < n; ++i) {
    double q = acc[i] / count;
    q = q < 0.0 ? 0.0 : (q > 1.0 ? 1.0 : q);
    dst[i] = static_cast<float>(q);
  }
}

void threshold_ge_scalar(std::int32_t* dst, const float* src, std::size_t n,
                         float tau) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = src[i] >= tau ? 1 : 0;
}

void minmax_scalar(const float* x, std::size_t n, float& mn, float& mx) {
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    lo = x[i] < lo ? x[i] : lo;
    hi = x[i] > hi ? x[i] : hi;
  }
  mn = lo;
  mx = hi;
}

MaskCounts overlap_counts_scalar(const std::int32_t* a, const std::int32_t* b,
                                 std::size_t n) {
  MaskCounts c;
  for (std::size_t i = 0; i < n; ++i) {
    const bool fa = a[i] != 0;
    const bool fb = b[i] != 0;
    c.count_a += fa;
    c.count_b += fb;
    c.count_inter += fa && fb;
    c.count_union += fa || fb;
  }
  return c;
}

}  // namespace

const Table& scalar_table() {
  static const Table table{
      "scalar",        sum_sumsq_scalar, affine_scalar, accumulate_scalar,
      mean_finalize_scalar, threshold_ge_scalar, minmax_scalar,
      overlap_counts_scalar,
  };
  return table;
}

}  // namespace nfpipe::kernels

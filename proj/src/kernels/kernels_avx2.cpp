// AVX2 variants of the voxel kernels. Compiled only on x86-64 with -mavx2
// -mfma; selection happens at runtime in kernels.cpp.

#if defined(NFPIPE_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "nfpipe/kernels.hpp"

namespace nfpipe::kernels {

namespace {

void sum_sumsq_avx2(const float* x, std::size_t n, double& sum, double& sumsq) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  __m256d q0 = _mm256_setzero_pd(), q1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(x + i);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    s0 = _mm256_add_pd(s0, lo);
    s1 = _mm256_add_pd(s1, hi);
    q0 = _mm256_fmadd_pd(lo, lo, q0);
    q1 = _mm256_fmadd_pd(hi, hi, q1);
  }
  alignas(32) double lanes[4];
  double s = 0.0, q = 0.0;
  _mm256_store_pd(lanes, _mm256_add_pd(s0, s1));
  s = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  _mm256_store_pd(lanes, _mm256_add_pd(q0, q1));
  q = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    s += v;
    q += v * v;
  }
  sum += s;
  sumsq += q;
}

void affine_avx2(float* dst, const float* src, std::size_t n, float scale,
                 float bias) {
  const __m256 vs = _mm256_set1_ps(scale);
  const __m256 vb = _mm256_set1_ps(bias);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(dst + i, _mm256_fmadd_ps(_mm256_loadu_ps(src + i), vs, vb));
  for (; i < n; ++i) dst[i] = std::fmaf(src[i], scale, bias);
}

void accumulate_avx2(double* acc, const float* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(src + i);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v, 1));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), lo));
    _mm256_storeu_pd(acc + i + 4, _mm256_add_pd(_mm256_loadu_pd(acc + i + 4), hi));
  }
  for (; i < n; ++i) acc[i] += static_cast<double>(src[i]);
}

void mean_finalize_avx2(float* dst, const double* acc, std::size_t n,
                        double count) {
  const __m256d vc = _mm256_set1_pd(count);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d q = _mm256_div_pd(_mm256_loadu_pd(acc + i), vc);
    q = _mm256_min_pd(_mm256_max_pd(q, zero), one);
    _mm_storeu_ps(dst + i, _mm256_cvtpd_ps(q));
  }
  for (; i < n; ++i) {
    double q = acc[i] / count;
    q = q < 0.0 ? 0.0 : (q > 1.0 ? 1.0 : q);
    dst[i] = static_cast<float>(q);
  }
}

void threshold_ge_avx2(std::int32_t* dst, const float* src, std::size_t n,
                       float tau) {
  const __m256 vt = _mm256_set1_ps(tau);
  const __m256i ones = _mm256_set1_epi32(1);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 cmp = _mm256_cmp_ps(_mm256_loadu_ps(src + i), vt, _CMP_GE_OQ);
    const __m256i bits = _mm256_and_si256(_mm256_castps_si256(cmp), ones);
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(dst + i), bits);
  }
  for (; i < n; ++i) dst[i] = src[i] >= tau ? 1 : 0;
}

void minmax_avx2(const float* x, std::size_t n, float& mn, float& mx) {
  float lo = std::numeric_limits<float>::infinity();
  float hi = -std::numeric_limits<float>::infinity();
  std::size_t i = 0;
  if (n >= 8) {
    __m256 vlo = _mm256_set1_ps(lo);
    __m256 vhi = _mm256_set1_ps(hi);
    for (; i + 8 <= n; i += 8) {
      const __m256 v = _mm256_loadu_ps(x + i);
      vlo = _mm256_min_ps(vlo, v);
      vhi = _mm256_max_ps(vhi, v);
    }
    alignas(32) float lanes[8];
    _mm256_store_ps(lanes, vlo);
    for (float v : lanes) lo = v < lo ? v : lo;
    _mm256_store_ps(lanes, vhi);
    for (float v : lanes) hi = v > hi ? v : hi;
  }
  for (; i < n; ++i) {
    lo = x[i] < lo ? x[i] : lo;
    hi = x[i] > hi ? x[i] : hi;
  }
  mn = lo;
  mx = hi;
}

MaskCounts overlap_counts_avx2(const std::int32_t* a, const std::int32_t* b,
                               std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  const __m256i all = _mm256_set1_epi32(-1);
  __m256i ca = zero, cb = zero, ci = zero, cu = zero;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    const __m256i nza = _mm256_xor_si256(_mm256_cmpeq_epi32(va, zero), all);
    const __m256i nzb = _mm256_xor_si256(_mm256_cmpeq_epi32(vb, zero), all);
    // masks are -1 per true lane; subtracting accumulates per-lane counts
    ca = _mm256_sub_epi32(ca, nza);
    cb = _mm256_sub_epi32(cb, nzb);
    ci = _mm256_sub_epi32(ci, _mm256_and_si256(nza, nzb));
    cu = _mm256_sub_epi32(cu, _mm256_or_si256(nza, nzb));
  }
  MaskCounts c;
  alignas(32) std::uint32_t lanes[8];
  auto reduce = [&lanes](__m256i v) {
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), v);
    std::uint64_t total = 0;
    for (std::uint32_t l : lanes) total += l;
    return total;
  };
  c.count_a = reduce(ca);
  c.count_b = reduce(cb);
  c.count_inter = reduce(ci);
  c.count_union = reduce(cu);
  for (; i < n; ++i) {
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

const Table* avx2_table_impl() {
  static const Table table{
      "avx2",          sum_sumsq_avx2, affine_avx2, accumulate_avx2,
      mean_finalize_avx2, threshold_ge_avx2, minmax_avx2,
      overlap_counts_avx2,
  };
  return &table;
}

}  // namespace nfpipe::kernels

#endif  // NFPIPE_HAVE_AVX2

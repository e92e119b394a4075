#pragma once

#include <cstddef>
#include <cstdint>

namespace nfpipe::kernels {

struct MaskCounts {
  std::uint64_t count_a = 0;      // nonzero voxels in a
  std::uint64_t count_b = 0;      // nonzero voxels in b
  std::uint64_t count_inter = 0;  // nonzero in both
  std::uint64_t count_union = 0;  // nonzero in either
};

/// Voxelwise inner-loop kernels. One scalar reference implementation plus an
/// AVX2 variant selected at runtime; both satisfy the same per-element
/// contracts so pipelines behave identically regardless of the table in use.
///
/// Equivalence guarantees (enforced by tests):
///   - affine, accumulate, mean_finalize, threshold_ge, minmax and
///     overlap_counts are bit-exact across variants (element-wise ops with a
///     single rounding each);
///   - sum_sumsq may differ across variants only by summation order
///     (relative error ~1e-15); each variant is individually deterministic.
///
/// Inputs are required to be finite (volumes are validated on construction).
struct Table {
  const char* name;

  /// sum += Σ x[i], sumsq += Σ x[i]^2, accumulated in double.
  void (*sum_sumsq)(const float* x, std::size_t n, double& sum, double& sumsq);

  /// dst[i] = fma(src[i], scale, bias) with a single rounding per element.
  void (*affine)(float* dst, const float* src, std::size_t n, float scale,
                 float bias);

  /// acc[i] += (double)src[i]
  void (*accumulate)(double* acc, const float* src, std::size_t n);

  /// dst[i] = (float)clamp(acc[i] / count, 0, 1), clamped in double before
  /// narrowing.
  void (*mean_finalize)(float* dst, const double* acc, std::size_t n,
                        double count);

  /// dst[i] = src[i] >= tau ? 1 : 0
  void (*threshold_ge)(std::int32_t* dst, const float* src, std::size_t n,
                       float tau);

  /// Running min/max over x; n == 0 leaves mn/mx at +inf/-inf.
  void (*minmax)(const float* x, std::size_t n, float& mn, float& mx);

  /// Nonzero-voxel counts for two int32 masks of equal length.
  MaskCounts (*overlap_counts)(const std::int32_t* a, const std::int32_t* b,
                               std::size_t n);
};

const Table& scalar_table();

/// nullptr when AVX2 variants were not compiled in or the CPU lacks AVX2.
const Table* avx2_table();

enum class Level { auto_detect, scalar, avx2 };

/// Force a variant (tests/benchmarks). Level::avx2 falls back to scalar when
/// unavailable.
void set_level(Level level);

/// The runtime-selected table. Honors NF_PIPELINE_SIMD=auto|scalar|avx2 and
/// any set_level() override; otherwise picks the widest variant the CPU
/// supports.
const Table& active();

}  // namespace nfpipe::kernels

// AVX2 variants; this translation unit is compiled with -mavx2 and only entered after a
// runtime CPU check.

#include <immintrin.h>

#include "procrecon/kernels.hpp"

namespace procrecon {

namespace {

void coverage_row_avx2(const EdgeSetup& e, int y, int x0, int x1, int n, std::uint64_t* bits) {
  if (n % 4 != 0) {
    scalar_kernels().coverage_row(e, y, x0, x1, n, bits);
    return;
  }
  const double inv = 1.0 / n;
  const int chunks = n / 4;
  const __m256d zero = _mm256_setzero_pd();
  const __m256d a0 = _mm256_set1_pd(e.a[0]), a1 = _mm256_set1_pd(e.a[1]), a2 = _mm256_set1_pd(e.a[2]);
  const __m256d c0 = _mm256_set1_pd(e.c[0]), c1 = _mm256_set1_pd(e.c[1]), c2 = _mm256_set1_pd(e.c[2]);
  __m256d offs[kMaxSamplesPerAxis / 4];
  for (int k = 0; k < chunks; ++k)
    offs[k] = _mm256_set_pd((4 * k + 3 + 0.5) * inv, (4 * k + 2 + 0.5) * inv, (4 * k + 1 + 0.5) * inv,
                            (4 * k + 0.5) * inv);

  for (int j = 0; j < n; ++j) {
    const double sy = static_cast<double>(y) + (j + 0.5) * inv;
    const __m256d r0 = _mm256_set1_pd(e.b[0] * sy), r1 = _mm256_set1_pd(e.b[1] * sy),
                  r2 = _mm256_set1_pd(e.b[2] * sy);
    for (int x = x0; x < x1; ++x) {
      const __m256d px = _mm256_set1_pd(static_cast<double>(x));
      std::uint64_t m = 0;
      for (int k = 0; k < chunks; ++k) {
        const __m256d sx = _mm256_add_pd(px, offs[k]);
        const __m256d e0 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(a0, sx), r0), c0);
        const __m256d e1 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(a1, sx), r1), c1);
        const __m256d e2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(a2, sx), r2), c2);
        const __m256d in = _mm256_and_pd(_mm256_and_pd(_mm256_cmp_pd(e0, zero, _CMP_GE_OQ),
                                                       _mm256_cmp_pd(e1, zero, _CMP_GE_OQ)),
                                         _mm256_cmp_pd(e2, zero, _CMP_GE_OQ));
        m |= static_cast<std::uint64_t>(_mm256_movemask_pd(in)) << (j * n + 4 * k);
      }
      bits[x - x0] |= m;
    }
  }
}

double squared_error_avx2(const double* a, const double* b, std::size_t count, double scale, double* grad) {
  __m256d acc = _mm256_setzero_pd();
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    _mm256_storeu_pd(grad + i, _mm256_mul_pd(s, d));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; i < count; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
    grad[i] = scale * d;
  }
  return sum;
}

void threshold_overlap_avx2(const double* a, const double* b, std::size_t count, double t,
                            std::uint64_t* intersection, std::uint64_t* union_count) {
  const __m256d tv = _mm256_set1_pd(t);
  std::uint64_t in = 0, un = 0;
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const __m256d pa = _mm256_cmp_pd(_mm256_loadu_pd(a + i), tv, _CMP_GE_OQ);
    const __m256d pb = _mm256_cmp_pd(_mm256_loadu_pd(b + i), tv, _CMP_GE_OQ);
    in += static_cast<std::uint64_t>(__builtin_popcount(_mm256_movemask_pd(_mm256_and_pd(pa, pb))));
    un += static_cast<std::uint64_t>(__builtin_popcount(_mm256_movemask_pd(_mm256_or_pd(pa, pb))));
  }
  for (; i < count; ++i) {
    const bool pa = a[i] >= t, pb = b[i] >= t;
    in += pa && pb;
    un += pa || pb;
  }
  *intersection = in;
  *union_count = un;
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{"avx2", coverage_row_avx2, squared_error_avx2, threshold_overlap_avx2};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
}

}  // namespace procrecon

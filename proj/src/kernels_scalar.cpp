#include "procrecon/kernels.hpp"

namespace procrecon {

namespace {

void coverage_row_scalar(const EdgeSetup& e, int y, int x0, int x1, int n, std::uint64_t* bits) {
  const double inv = 1.0 / n;
  for (int j = 0; j < n; ++j) {
    const double sy = static_cast<double>(y) + (j + 0.5) * inv;
    // Row-constant part of each edge function.
    const double r0 = e.b[0] * sy, r1 = e.b[1] * sy, r2 = e.b[2] * sy;
    for (int x = x0; x < x1; ++x) {
      std::uint64_t m = 0;
      for (int i = 0; i < n; ++i) {
        const double sx = static_cast<double>(x) + (i + 0.5) * inv;
        const double e0 = e.a[0] * sx + r0 + e.c[0];
        const double e1 = e.a[1] * sx + r1 + e.c[1];
        const double e2 = e.a[2] * sx + r2 + e.c[2];
        if (e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0) m |= std::uint64_t{1} << (j * n + i);
      }
      bits[x - x0] |= m;
    }
  }
}

double squared_error_scalar(const double* a, const double* b, std::size_t count, double scale, double* grad) {
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
    grad[i] = scale * d;
  }
  return sum;
}

void threshold_overlap_scalar(const double* a, const double* b, std::size_t count, double t,
                              std::uint64_t* intersection, std::uint64_t* union_count) {
  std::uint64_t in = 0, un = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const bool pa = a[i] >= t, pb = b[i] >= t;
    in += pa && pb;
    un += pa || pb;
  }
  *intersection = in;
  *union_count = un;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", coverage_row_scalar, squared_error_scalar, threshold_overlap_scalar};
  return table;
}

}  // namespace procrecon

#pragma once

// Data-parallel inner loops of the rasterizer and image losses. Each kernel has a scalar
// reference implementation and, where the CPU allows, a SIMD variant selected at runtime.
// Variants must agree bit-for-bit on coverage masks and IoU counts; float reductions may
// differ only by summation order.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace procrecon {

/// Three edge functions E_k(x, y) = a[k] * x + b[k] * y + c[k]; a point is inside when all are >= 0.
struct EdgeSetup {
  double a[3];
  double b[3];
  double c[3];
};

inline constexpr int kMaxSamplesPerAxis = 8;

struct KernelTable {
  std::string_view name;

  /// For pixels x in [x0, x1) of row y, ORs the n x n subsample coverage bits of the triangle into
  /// bits[x - x0]. Subsample (i, j) sits at (x + (i + 0.5) / n, y + (j + 0.5) / n), bit j * n + i.
  void (*coverage_row)(const EdgeSetup& e, int y, int x0, int x1, int n, std::uint64_t* bits);

  /// Returns sum (a - b)^2 and writes grad[i] = scale * (a[i] - b[i]).
  double (*squared_error)(const double* a, const double* b, std::size_t count, double scale, double* grad);

  /// Counts pixels with (a >= t and b >= t) and (a >= t or b >= t).
  void (*threshold_overlap)(const double* a, const double* b, std::size_t count, double t,
                            std::uint64_t* intersection, std::uint64_t* union_count);
};

const KernelTable& scalar_kernels();
/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();

/// Kernel table used by the library: the best supported variant unless PROCRECON_KERNELS=scalar.
const KernelTable& active_kernels();
/// Overrides the active table (tests); pass nullptr to restore automatic selection.
void set_active_kernels(const KernelTable* table);

}  // namespace procrecon

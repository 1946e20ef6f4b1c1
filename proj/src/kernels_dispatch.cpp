#include <atomic>
#include <cstdlib>
#include <string_view>

#include "procrecon/kernels.hpp"

namespace procrecon {

#ifndef PROCRECON_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

namespace {

std::atomic<const KernelTable*> g_override{nullptr};

const KernelTable& detect() {
  const char* env = std::getenv("PROCRECON_KERNELS");
  if (env != nullptr && std::string_view(env) == "scalar") return scalar_kernels();
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active_kernels() {
  if (const KernelTable* t = g_override.load(std::memory_order_acquire)) return *t;
  static const KernelTable& detected = detect();
  return detected;
}

void set_active_kernels(const KernelTable* table) { g_override.store(table, std::memory_order_release); }

}  // namespace procrecon

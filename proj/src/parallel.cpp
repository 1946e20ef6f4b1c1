#include "procrecon/parallel.hpp"

#include <cstdlib>
#include <string>

namespace procrecon {

std::size_t worker_count() {
  static const std::size_t count = [] {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("PROCRECON_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    try {
      long v = std::stol(env);
      if (v <= 0) return hw;
      return static_cast<std::size_t>(v);
    } catch (...) {
      return hw;
    }
  }();
  return count;
}

}  // namespace procrecon

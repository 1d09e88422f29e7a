#include <atomic>
#include <cstdlib>
#include <string>

#include "koppelman/error.hpp"
#include "koppelman/simd.hpp"

namespace koppelman::simd {

const Kernels& avx2_table();

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels* detect() {
  const char* env = std::getenv("KOPPELMAN_SIMD");
  if (env != nullptr) {
    std::string v(env);
    if (v == "scalar") return &scalar_kernels();
    if (v == "avx2" && avx2_kernels() != nullptr) return avx2_kernels();
  }
  if (const Kernels* k = avx2_kernels()) return k;
  return &scalar_kernels();
}

std::atomic<const Kernels*>& slot() {
  static std::atomic<const Kernels*> s{detect()};
  return s;
}

}  // namespace

const Kernels* avx2_kernels() {
  static const bool ok = cpu_has_avx2();
  return ok ? &avx2_table() : nullptr;
}

const Kernels& active() { return *slot().load(std::memory_order_acquire); }

void force(std::string_view name) {
  if (name == "scalar") {
    slot().store(&scalar_kernels(), std::memory_order_release);
  } else if (name == "avx2") {
    if (avx2_kernels() == nullptr) throw Error(ErrorCode::invalid_argument, "AVX2 not supported on this CPU");
    slot().store(avx2_kernels(), std::memory_order_release);
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown SIMD path '" + std::string(name) + "'");
  }
}

}  // namespace koppelman::simd

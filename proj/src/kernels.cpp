#include "warp/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kernels_impl.hpp"

namespace warp::kernels {

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", &scalar::axpy, &scalar::dot, &scalar::relu,
                                 &scalar::relu_mask};
  return table;
}

const KernelTable* avx2_table() {
#if defined(WARP_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  static const KernelTable table{"avx2", &avx2::axpy, &avx2::dot, &avx2::relu, &avx2::relu_mask};
  return supported ? &table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(WARP_HAVE_NEON)
  static const KernelTable table{"neon", &neon::axpy, &neon::dot, &neon::relu, &neon::relu_mask};
  return &table;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select_table() {
  const char* forced = std::getenv("WARP_SIMD");
  if (forced != nullptr && std::strcmp(forced, "scalar") == 0) return scalar_table();
  if (const KernelTable* t = avx2_table()) return *t;
  if (const KernelTable* t = neon_table()) return *t;
  return scalar_table();
}

}  // namespace

namespace {
std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{&select_table()};
  return table;
}
}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

ScopedTableOverride::ScopedTableOverride(const KernelTable& table) : previous_(current().exchange(&table)) {}

ScopedTableOverride::~ScopedTableOverride() { current().store(previous_); }

}  // namespace warp::kernels

#pragma once

// Data-parallel inner loops used by the convolution layers and the warping
// products. Each kernel has a scalar reference and per-ISA variants; the
// active table is picked once at startup from CPU features.
//
// Set WARP_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <string_view>

namespace warp::kernels {

// y[i] += alpha * x[i]
using AxpyFn = void (*)(std::size_t n, double alpha, const double* x, double* y);
// sum_i x[i] * y[i]
using DotFn = double (*)(std::size_t n, const double* x, const double* y);
// y[i] = max(y[i], 0)
using ReluFn = void (*)(std::size_t n, double* y);
// g[i] = x[i] > 0 ? g[i] : 0
using ReluMaskFn = void (*)(std::size_t n, const double* x, double* g);

struct KernelTable {
  std::string_view name;
  AxpyFn axpy;
  DotFn dot;
  ReluFn relu;
  ReluMaskFn relu_mask;
};

const KernelTable& scalar_table();
// nullptr when the ISA is not compiled in or not supported by this CPU.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Table in use for this process.
const KernelTable& active();

// Swaps the active table until destruction; for equivalence tests only.
class ScopedTableOverride {
 public:
  explicit ScopedTableOverride(const KernelTable& table);
  ~ScopedTableOverride();
  ScopedTableOverride(const ScopedTableOverride&) = delete;
  ScopedTableOverride& operator=(const ScopedTableOverride&) = delete;

 private:
  const KernelTable* previous_;
};

inline void axpy(std::size_t n, double alpha, const double* x, double* y) {
  active().axpy(n, alpha, x, y);
}
inline double dot(std::size_t n, const double* x, const double* y) { return active().dot(n, x, y); }
inline void relu(std::size_t n, double* y) { active().relu(n, y); }
inline void relu_mask(std::size_t n, const double* x, double* g) { active().relu_mask(n, x, g); }

}  // namespace warp::kernels

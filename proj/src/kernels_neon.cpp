#include <arm_neon.h>

#include "kernels_impl.hpp"

namespace warp::kernels::neon {

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const float64x2_t a = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), a, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void relu(std::size_t n, double* y) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmaxq_f64(vld1q_f64(y + i), zero));
  for (; i < n; ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
}

void relu_mask(std::size_t n, const double* x, double* g) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    uint64x2_t keep = vcgtzq_f64(vld1q_f64(x + i));
    vst1q_f64(g + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(vld1q_f64(g + i)), keep)));
  }
  for (; i < n; ++i)
    if (!(x[i] > 0.0)) g[i] = 0.0;
}

}  // namespace warp::kernels::neon

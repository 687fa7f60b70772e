#pragma once

#include <cstddef>

namespace warp::kernels {

namespace scalar {
void axpy(std::size_t n, double alpha, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
void relu(std::size_t n, double* y);
void relu_mask(std::size_t n, const double* x, double* g);
}  // namespace scalar

#if defined(WARP_HAVE_AVX2)
namespace avx2 {
void axpy(std::size_t n, double alpha, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
void relu(std::size_t n, double* y);
void relu_mask(std::size_t n, const double* x, double* g);
}  // namespace avx2
#endif

#if defined(WARP_HAVE_NEON)
namespace neon {
void axpy(std::size_t n, double alpha, const double* x, double* y);
double dot(std::size_t n, const double* x, const double* y);
void relu(std::size_t n, double* y);
void relu_mask(std::size_t n, const double* x, double* g);
}  // namespace neon
#endif

}  // namespace warp::kernels

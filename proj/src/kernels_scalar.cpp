#include "kernels_impl.hpp"

namespace warp::kernels::scalar {

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double dot(std::size_t n, const double* x, const double* y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void relu(std::size_t n, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] > 0.0 ? y[i] : 0.0;
}

void relu_mask(std::size_t n, const double* x, double* g) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(x[i] > 0.0)) g[i] = 0.0;
}

}  // namespace warp::kernels::scalar

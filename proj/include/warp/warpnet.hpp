#pragma once

#include <utility>

#include "warp/core.hpp"
#include "warp/unet.hpp"

namespace warp {

// Row-wise softmax with max subtraction, no temperature.
WarpingMatrix row_softmax(const Matrix& m);

struct WarpPaths {
  WarpingMatrix source;  // P_s = row_softmax(P), warps B onto A's time axis
  WarpingMatrix target;  // P_t = row_softmax(P^T), warps A onto B's time axis
};

WarpPaths make_paths(const Matrix& p_raw);

// Row i of the result is p_i x, a convex combination of x's rows.
TimeSeries warp(const WarpingMatrix& p, const TimeSeries& x);

// (||A - P_s B||^2 + ||B - P_t A||^2) / (2WK)
double pair_distance(const TimeSeries& a, const TimeSeries& b, const WarpingMatrix& p_source,
                     const WarpingMatrix& p_target);

// Hinge contrastive loss on the mean squared residual between x and its
// warped partner: z=1 pulls together, z=0 pushes beyond the margin.
double contrastive_loss(const TimeSeries& x, const TimeSeries& warped, int z, double margin);

// Sum of the two directional contrastive losses.
double training_loss(const TimeSeries& a, const TimeSeries& b, const WarpingMatrix& p_source,
                     const WarpingMatrix& p_target, int z, double margin);

// (1/W^2) ||P_s - P_DTW||_F^2
double pretrain_loss(const WarpingMatrix& p_source, const WarpingMatrix& p_dtw);

// Adjoint of row_softmax: given S = row_softmax(X) and dL/dS, returns dL/dX.
Matrix row_softmax_backward(const Matrix& softmaxed, const Matrix& grad);

struct LossGrad {
  double loss = 0.0;
  Matrix grad_p_raw;  // dL/dP for the raw U-Net output
};

LossGrad training_loss_grad(const TimeSeries& a, const TimeSeries& b, const Matrix& p_raw, int z,
                            double margin);
LossGrad pretrain_loss_grad(const Matrix& p_raw, const WarpingMatrix& p_dtw);

// Learned metric for one pair: U-Net forward, softmaxes, distance.
double model_distance(const UNetParams& params, const TimeSeries& a, const TimeSeries& b);

}  // namespace warp

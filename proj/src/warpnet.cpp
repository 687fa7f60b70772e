#include "warp/warpnet.hpp"

#include <algorithm>
#include <cmath>

#include "warp/kernels.hpp"

namespace warp {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw Error(ErrorCode::kNonFiniteInput, what);
}

void require_normalized(const WarpingMatrix& p) {
  if (!p.normalized()) throw Error(ErrorCode::kNotNormalized, "warping matrix is not row-normalized");
}

// Residual R = X - P Y and its squared Frobenius norm.
double warp_residual(const Matrix& p, const Matrix& x, const Matrix& y, Matrix* residual) {
  const std::size_t w = x.rows();
  const std::size_t k = x.cols();
  Matrix r = x;
  for (std::size_t i = 0; i < w; ++i) {
    double* ri = r.row(i).data();
    for (std::size_t j = 0; j < w; ++j) kernels::axpy(k, -p(i, j), y.row(j).data(), ri);
  }
  double sq = 0.0;
  for (double v : r.data()) sq += v * v;
  if (residual != nullptr) *residual = std::move(r);
  return sq;
}

double hinge(double mean_sq, int z, double margin) {
  return z == 1 ? mean_sq : std::max(0.0, margin - mean_sq);
}

// d hinge / d mean_sq; the kink at mean_sq == margin takes subgradient 0.
double hinge_slope(double mean_sq, int z, double margin) {
  if (z == 1) return 1.0;
  return margin - mean_sq > 0.0 ? -1.0 : 0.0;
}

}  // namespace

WarpingMatrix row_softmax(const Matrix& m) {
  require_finite(m, "softmax input contains NaN or Inf");
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto in_row = m.row(i);
    auto out_row = out.row(i);
    const double peak = *std::max_element(in_row.begin(), in_row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < in_row.size(); ++j) {
      out_row[j] = std::exp(in_row[j] - peak);
      sum += out_row[j];
    }
    for (double& v : out_row) v /= sum;
  }
  return WarpingMatrix(std::move(out), true);
}

WarpPaths make_paths(const Matrix& p_raw) {
  return {row_softmax(p_raw), row_softmax(p_raw.transposed())};
}

TimeSeries warp(const WarpingMatrix& p, const TimeSeries& x) {
  require_normalized(p);
  if (p.size() != x.length()) throw Error(ErrorCode::kShapeMismatch, "warping matrix size != series length");
  const std::size_t w = x.length();
  const std::size_t k = x.dims();
  Matrix out(w, k);
  for (std::size_t i = 0; i < w; ++i) {
    double* oi = out.row(i).data();
    for (std::size_t j = 0; j < w; ++j) kernels::axpy(k, p(i, j), x.values().row(j).data(), oi);
  }
  return TimeSeries(std::move(out));
}

double pair_distance(const TimeSeries& a, const TimeSeries& b, const WarpingMatrix& p_source,
                     const WarpingMatrix& p_target) {
  validate_pair(a, b);
  require_normalized(p_source);
  require_normalized(p_target);
  if (p_source.size() != a.length() || p_target.size() != a.length()) {
    throw Error(ErrorCode::kShapeMismatch, "warping matrix size != series length");
  }
  const double wk = static_cast<double>(a.length() * a.dims());
  const double ab = warp_residual(p_source.entries(), a.values(), b.values(), nullptr);
  const double ba = warp_residual(p_target.entries(), b.values(), a.values(), nullptr);
  return (ab + ba) / (2.0 * wk);
}

double contrastive_loss(const TimeSeries& x, const TimeSeries& warped, int z, double margin) {
  if (x.length() != warped.length() || x.dims() != warped.dims()) {
    throw Error(ErrorCode::kShapeMismatch, "series and warped series differ in shape");
  }
  if (!(margin > 0.0)) throw Error(ErrorCode::kInvalidConfig, "margin must be > 0");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.values().size(); ++i) {
    const double d = x.values().data()[i] - warped.values().data()[i];
    sq += d * d;
  }
  return hinge(sq / static_cast<double>(x.length() * x.dims()), z, margin);
}

double training_loss(const TimeSeries& a, const TimeSeries& b, const WarpingMatrix& p_source,
                     const WarpingMatrix& p_target, int z, double margin) {
  return contrastive_loss(a, warp(p_source, b), z, margin) + contrastive_loss(b, warp(p_target, a), z, margin);
}

double pretrain_loss(const WarpingMatrix& p_source, const WarpingMatrix& p_dtw) {
  require_normalized(p_source);
  require_normalized(p_dtw);
  if (p_source.size() != p_dtw.size()) throw Error(ErrorCode::kShapeMismatch, "matrix sizes differ");
  const std::size_t w = p_source.size();
  double sq = 0.0;
  for (std::size_t i = 0; i < w * w; ++i) {
    const double d = p_source.entries().data()[i] - p_dtw.entries().data()[i];
    sq += d * d;
  }
  return sq / static_cast<double>(w * w);
}

Matrix row_softmax_backward(const Matrix& softmaxed, const Matrix& grad) {
  Matrix out(softmaxed.rows(), softmaxed.cols());
  for (std::size_t i = 0; i < softmaxed.rows(); ++i) {
    auto s = softmaxed.row(i);
    auto g = grad.row(i);
    const double inner = kernels::dot(s.size(), s.data(), g.data());
    auto o = out.row(i);
    for (std::size_t j = 0; j < s.size(); ++j) o[j] = s[j] * (g[j] - inner);
  }
  return out;
}

LossGrad training_loss_grad(const TimeSeries& a, const TimeSeries& b, const Matrix& p_raw, int z, double margin) {
  validate_pair(a, b);
  const std::size_t w = a.length();
  const std::size_t k = a.dims();
  if (p_raw.rows() != w || p_raw.cols() != w) throw Error(ErrorCode::kShapeMismatch, "P is not W x W");
  const WarpPaths paths = make_paths(p_raw);
  const double wk = static_cast<double>(w * k);

  LossGrad out;
  out.grad_p_raw = Matrix(w, w);
  // Direction 1 residual A - P_s B feeds P rows; direction 2 B - P_t A feeds P^T rows.
  struct Direction {
    const Matrix& p;
    const Matrix& x;
    const Matrix& y;
    bool transposed;
  };
  const Direction dirs[2] = {{paths.source.entries(), a.values(), b.values(), false},
                             {paths.target.entries(), b.values(), a.values(), true}};
  for (const auto& dir : dirs) {
    Matrix residual;
    const double mean_sq = warp_residual(dir.p, dir.x, dir.y, &residual) / wk;
    out.loss += hinge(mean_sq, z, margin);
    const double slope = hinge_slope(mean_sq, z, margin);
    if (slope == 0.0) continue;
    // dL/dP_dir = slope * (-2/WK) R Y^T
    Matrix grad_p(w, w);
    const double scale = -2.0 * slope / wk;
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j)
        grad_p(i, j) = scale * kernels::dot(k, residual.row(i).data(), dir.y.row(j).data());
    const Matrix grad_raw = row_softmax_backward(dir.p, grad_p);
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        if (dir.transposed) {
          out.grad_p_raw(j, i) += grad_raw(i, j);
        } else {
          out.grad_p_raw(i, j) += grad_raw(i, j);
        }
      }
  }
  return out;
}

LossGrad pretrain_loss_grad(const Matrix& p_raw, const WarpingMatrix& p_dtw) {
  const std::size_t w = p_raw.rows();
  if (p_raw.cols() != w || p_dtw.size() != w) throw Error(ErrorCode::kShapeMismatch, "matrix sizes differ");
  const WarpingMatrix ps = row_softmax(p_raw);
  LossGrad out;
  out.loss = pretrain_loss(ps, p_dtw);
  Matrix grad_ps(w, w);
  const double scale = 2.0 / static_cast<double>(w * w);
  for (std::size_t i = 0; i < w * w; ++i) {
    grad_ps.data()[i] = scale * (ps.entries().data()[i] - p_dtw.entries().data()[i]);
  }
  out.grad_p_raw = row_softmax_backward(ps.entries(), grad_ps);
  return out;
}

double model_distance(const UNetParams& params, const TimeSeries& a, const TimeSeries& b) {
  const WarpPaths paths = make_paths(unet_forward(params, a, b));
  return pair_distance(a, b, paths.source, paths.target);
}

}  // namespace warp

#include "warp/dtw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "warp/warpnet.hpp"

namespace warp::dtw {

Matrix local_cost_matrix(const TimeSeries& a, const TimeSeries& b) {
  validate_pair(a, b);
  const std::size_t w = a.length();
  const std::size_t k = a.dims();
  Matrix cost(w, w);
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      double acc = 0.0;
      for (std::size_t d = 0; d < k; ++d) {
        const double diff = a(i, d) - b(j, d);
        acc += diff * diff;
      }
      cost(i, j) = acc;
    }
  }
  return cost;
}

DtwResult dtw_align(const Matrix& cost) {
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  if (rows == 0 || cols == 0) throw Error(ErrorCode::kShapeMismatch, "empty cost matrix");
  for (double v : cost.data()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kNonFiniteInput, "cost entries must be finite and >= 0");
    }
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  Matrix acc(rows, cols, kInf);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double best;
      if (i == 0 && j == 0) {
        best = 0.0;
      } else {
        best = kInf;
        if (i > 0 && j > 0) best = std::min(best, acc(i - 1, j - 1));
        if (i > 0) best = std::min(best, acc(i - 1, j));
        if (j > 0) best = std::min(best, acc(i, j - 1));
      }
      acc(i, j) = best + cost(i, j);
    }
  }

  DtwResult result;
  result.distance = acc(rows - 1, cols - 1);
  std::size_t i = rows - 1;
  std::size_t j = cols - 1;
  result.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = acc(i - 1, j - 1);
      const double up = acc(i - 1, j);
      const double left = acc(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    result.path.emplace_back(i, j);
  }
  std::reverse(result.path.begin(), result.path.end());

  result.path_matrix = Matrix(rows, cols);
  for (const auto& [pi, pj] : result.path) result.path_matrix(pi, pj) = 1.0;
  return result;
}

bool is_admissible(const Path& path, std::size_t rows, std::size_t cols) {
  if (path.empty() || rows == 0 || cols == 0) return false;
  if (path.front() != PathStep{0, 0} || path.back() != PathStep{rows - 1, cols - 1}) return false;
  for (std::size_t s = 1; s < path.size(); ++s) {
    const auto [pi, pj] = path[s - 1];
    const auto [ci, cj] = path[s];
    if (ci < pi || cj < pj) return false;
    const std::size_t di = ci - pi;
    const std::size_t dj = cj - pj;
    if (di > 1 || dj > 1 || (di == 0 && dj == 0)) return false;
  }
  return true;
}

Matrix path_to_matrix(const Path& path, std::size_t length) {
  if (!is_admissible(path, length, length)) {
    throw Error(ErrorCode::kInvalidPath, "path violates boundary, monotonicity or continuity");
  }
  Matrix m(length, length);
  for (const auto& [i, j] : path) m(i, j) = 1.0;
  return m;
}

WarpingMatrix dtw_target(const TimeSeries& a, const TimeSeries& b) {
  const DtwResult aligned = dtw_align(local_cost_matrix(a, b));
  return row_softmax(path_to_matrix(aligned.path, a.length()));
}

double dtw_distance(const TimeSeries& a, const TimeSeries& b) {
  return dtw_align(local_cost_matrix(a, b)).distance;
}

}  // namespace warp::dtw

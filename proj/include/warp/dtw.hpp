#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "warp/core.hpp"

namespace warp::dtw {

using PathStep = std::pair<std::size_t, std::size_t>;
using Path = std::vector<PathStep>;

struct DtwResult {
  double distance = 0.0;
  Path path;           // 0-based (i, j), from (0,0) to (W-1, W-1)
  Matrix path_matrix;  // 1 on path cells, 0 elsewhere
};

// Entry (i, j) = squared Euclidean distance between a_i and b_j.
Matrix local_cost_matrix(const TimeSeries& a, const TimeSeries& b);

// Optimal alignment with steps {(1,0),(0,1),(1,1)}, no band. Backtrace
// prefers the diagonal, then (i-1, j), then (i, j-1) on ties.
DtwResult dtw_align(const Matrix& cost);

// Binary W x W matrix of the path cells. Throws kInvalidPath when the path
// breaks the boundary, monotonicity or continuity conditions.
Matrix path_to_matrix(const Path& path, std::size_t length);

// Row-softmaxed DTW path matrix, the pre-training target.
WarpingMatrix dtw_target(const TimeSeries& a, const TimeSeries& b);

// Convenience: dtw_align(local_cost_matrix(a, b)).distance.
double dtw_distance(const TimeSeries& a, const TimeSeries& b);

bool is_admissible(const Path& path, std::size_t rows, std::size_t cols);

}  // namespace warp::dtw

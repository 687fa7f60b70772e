#pragma once

// Generators and independent oracles shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "warp/core.hpp"

namespace warp::testing {

inline TimeSeries random_series(std::mt19937_64& rng, std::size_t w, std::size_t k, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(w * k);
  for (double& x : v) x = normal(rng);
  return TimeSeries(w, k, std::move(v));
}

inline Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (double& x : m.data()) x = u(rng);
  return m;
}

// Minimum summed cost over every admissible warping path, by exhaustive
// recursion over the three step directions from (0,0).
inline double brute_force_dtw(const Matrix& cost) {
  const std::size_t rows = cost.rows();
  const std::size_t cols = cost.cols();
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += cost(i, j);
    if (i == rows - 1 && j == cols - 1) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < rows) walk(i + 1, j, acc);
    if (j + 1 < cols) walk(i, j + 1, acc);
    if (i + 1 < rows && j + 1 < cols) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

// Equal error rate from a fine threshold grid. Every grid threshold gives
// an operating point (FAR, FRR), accepting a probe when its distance <=
// threshold. Mixing two operating points at random reaches any point on the
// segment between them, so the EER is the smallest FAR = FRR value reachable
// by any such segment; every pair of points is tried.
inline double grid_eer(const std::vector<double>& genuine, const std::vector<double>& forgery,
                       std::size_t steps = 200000) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double s : genuine) lo = std::min(lo, s), hi = std::max(hi, s);
  for (double s : forgery) lo = std::min(lo, s), hi = std::max(hi, s);
  const double pad = (hi - lo) * 0.01 + 1e-9;
  lo -= pad;
  hi += pad;
  std::vector<std::pair<double, double>> points;
  for (std::size_t s = 0; s <= steps; ++s) {
    const double t = lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(steps);
    double frr = 0.0;
    double far = 0.0;
    for (double g : genuine) frr += g > t ? 1.0 : 0.0;
    for (double f : forgery) far += f <= t ? 1.0 : 0.0;
    frr /= static_cast<double>(genuine.size());
    far /= static_cast<double>(forgery.size());
    if (points.empty() || points.back() != std::make_pair(far, frr)) points.emplace_back(far, frr);
  }
  double best = 1.0;
  for (const auto& [far, frr] : points)
    if (far == frr) best = std::min(best, far);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      const double di = points[i].first - points[i].second;
      const double dj = points[j].first - points[j].second;
      if ((di < 0.0 && dj > 0.0) || (di > 0.0 && dj < 0.0)) {
        const double alpha = di / (di - dj);
        best = std::min(best, points[i].first + alpha * (points[j].first - points[i].first));
      }
    }
  }
  return best;
}

struct EerCase {
  std::vector<double> genuine, forgery;
  double eer;
};

// Values come from the operating points (FAR, FRR) at each pooled score and
// the lower convex hull through them.
inline std::vector<EerCase> eer_hand_cases() {
  return {
      {{1, 2}, {3, 4}, 0.0},
      {{1, 2}, {1, 2}, 0.5},
      {{1, 3}, {2, 4}, 0.25},
      {{3, 4}, {1, 2}, 0.5},  // reversed scores: the hull falls back to chance
      {{1}, {2}, 0.0},
      {{2}, {1}, 0.5},
      {{1}, {1}, 0.5},
      {{1, 2, 3}, {2.5, 4, 5}, 1.0 / 6.0},
      {{1, 2, 3, 4}, {0, 5, 6, 7}, 0.2},
      {{1, 1, 1}, {1, 1, 1}, 0.5},
      {{1, 2}, {1.5, 3, 4, 5}, 1.0 / 6.0},
  };
}

inline ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(-1);
}

// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x, std::size_t i, double eps) {
  const double orig = x[i];
  x[i] = orig + eps;
  const double up = f(x);
  x[i] = orig - eps;
  const double down = f(x);
  return (up - down) / (2.0 * eps);
}

// |a - n| / max(|a|, |n|, floor). The floor sits above central-difference
// roundoff (about 1e-16 * |loss| / eps), so a gradient that is exactly zero,
// such as the final bias under row softmax, is not judged on noise.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace warp::testing

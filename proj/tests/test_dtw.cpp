#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "warp/dtw.hpp"

using namespace warp;
using namespace warp::dtw;

namespace {
TimeSeries series1d(std::vector<double> v) {
  const std::size_t n = v.size();
  return TimeSeries(n, 1, std::move(v));
}
}  // namespace

TEST_CASE("local cost of zero series is zero") {
  const TimeSeries z(3, 2, std::vector<double>(6, 0.0));
  CHECK(local_cost_matrix(z, z) == Matrix(3, 3));
}

TEST_CASE("local cost matches elementwise squared differences") {
  const Matrix cost = local_cost_matrix(series1d({0, 1, 2}), series1d({0, 2, 2}));
  CHECK(cost == Matrix(3, 3, std::vector<double>{0, 4, 4, 1, 1, 1, 4, 0, 0}));
}

TEST_CASE("local cost is transposed when arguments swap") {
  std::mt19937_64 rng(4);
  const auto a = testing::random_series(rng, 7, 3);
  const auto b = testing::random_series(rng, 7, 3);
  CHECK(local_cost_matrix(a, b) == local_cost_matrix(b, a).transposed());
  CHECK_THROWS_AS(local_cost_matrix(a, testing::random_series(rng, 6, 3)), Error);
}

TEST_CASE("identical sequences align on the diagonal at zero cost") {
  std::mt19937_64 rng(5);
  const auto a = testing::random_series(rng, 9, 2);
  const DtwResult r = dtw_align(local_cost_matrix(a, a));
  CHECK(r.distance == 0.0);
  REQUIRE(r.path.size() == 9);
  for (std::size_t i = 0; i < 9; ++i) CHECK(r.path[i] == PathStep{i, i});
}

TEST_CASE("repeated value is absorbed by a horizontal step") {
  // a=[0,1,2,3], b=[0,1,1,3]: the 2 in a has no equal partner, so the best
  // admissible path costs 1 (exhaustive enumeration agrees).
  const Matrix cost = local_cost_matrix(series1d({0, 1, 2, 3}), series1d({0, 1, 1, 3}));
  const DtwResult r = dtw_align(cost);
  CHECK(r.distance == doctest::Approx(testing::brute_force_dtw(cost)));
  CHECK(r.distance == doctest::Approx(1.0));
  // b's two 1s both match a's single 1.
  const DtwResult r2 = dtw_align(local_cost_matrix(series1d({0, 1, 3}), series1d({0, 1, 1})));
  CHECK(r2.distance == doctest::Approx(4.0));
  const DtwResult r3 = dtw_align(local_cost_matrix(series1d({0, 1, 1, 3}), series1d({0, 1, 3, 3})));
  CHECK(r3.distance == 0.0);
}

TEST_CASE("dtw_align equals brute force on random cost matrices") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t w = 1 + trial % 6;
    const Matrix cost = testing::random_matrix(rng, w, w, 0.0, 5.0);
    const DtwResult r = dtw_align(cost);
    CHECK(std::abs(r.distance - testing::brute_force_dtw(cost)) <= 1e-9);
    CHECK(is_admissible(r.path, w, w));
    double along = 0.0;
    for (const auto& [i, j] : r.path) along += cost(i, j);
    CHECK(std::abs(along - r.distance) <= 1e-9);
  }
}

TEST_CASE("tie-break prefers the diagonal, then vertical") {
  // Flat costs: every path through the diagonal is strictly cheaper.
  const DtwResult r = dtw_align(Matrix(3, 3, 1.0));
  CHECK(r.path == Path{{0, 0}, {1, 1}, {2, 2}});
  // All-zero 2x2: diagonal, vertical and horizontal tie; diagonal wins.
  CHECK(dtw_align(Matrix(2, 2)).path == Path{{0, 0}, {1, 1}});
  // Centre blocked: two zero-cost detours tie at (2,2); vertical (i-1) wins.
  Matrix blocked(3, 3, std::vector<double>{0, 0, 9, 0, 9, 0, 9, 0, 0});
  const DtwResult rb = dtw_align(blocked);
  CHECK(rb.distance == 0.0);
  CHECK(rb.path == Path{{0, 0}, {0, 1}, {1, 2}, {2, 2}});
}

TEST_CASE("dtw_align rejects negative or non-finite cost") {
  CHECK_THROWS_AS(dtw_align(Matrix(2, 2, -1.0)), Error);
  CHECK_THROWS_AS(dtw_align(Matrix(2, 2, std::nan(""))), Error);
}

TEST_CASE("distance is symmetric") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = testing::random_series(rng, 12, 2);
    const auto b = testing::random_series(rng, 12, 2);
    CHECK(std::abs(dtw_distance(a, b) - dtw_distance(b, a)) <= 1e-9);
  }
}

TEST_CASE("path_to_matrix") {
  CHECK(path_to_matrix({{0, 0}, {1, 1}, {2, 2}}, 3) ==
        Matrix(3, 3, std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}));
  CHECK(path_to_matrix({{0, 0}, {1, 0}, {1, 1}}, 2) == Matrix(2, 2, std::vector<double>{1, 0, 1, 1}));
  CHECK_THROWS_AS(path_to_matrix({{0, 0}, {1, 1}}, 3), Error);          // misses the corner
  CHECK_THROWS_AS(path_to_matrix({{0, 0}, {2, 2}}, 3), Error);          // jump
  CHECK_THROWS_AS(path_to_matrix({{0, 0}, {1, 1}, {0, 2}, {2, 2}}, 3), Error);  // backwards
}

TEST_CASE("every row and column of a DTW path matrix is covered") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = testing::random_series(rng, 10, 2);
    const auto b = testing::random_series(rng, 10, 2);
    const Matrix m = path_to_matrix(dtw_align(local_cost_matrix(a, b)).path, 10);
    for (std::size_t i = 0; i < 10; ++i) {
      double row = 0.0;
      double col = 0.0;
      for (std::size_t j = 0; j < 10; ++j) row += m(i, j), col += m(j, i);
      CHECK(row >= 1.0);
      CHECK(col >= 1.0);
    }
  }
}

TEST_CASE("dtw_target softmaxes the binary path") {
  const auto a = series1d({0.0, 1.0});
  const WarpingMatrix t = dtw_target(a, a);
  const double e = std::exp(1.0);
  CHECK(t.normalized());
  CHECK(t(0, 0) == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
  CHECK(t(0, 1) == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
  CHECK(t(1, 1) == doctest::Approx(0.7311).epsilon(1e-4));

  // A row of the path matrix equal to [1,1,0] softmaxes to [e,e,1]/(2e+1).
  const auto b = series1d({0.0, 0.0, 5.0});
  const auto c = series1d({0.0, 5.0, 5.0});
  const WarpingMatrix t2 = dtw_target(b, c);
  // Path: (0,0),(1,0),(2,1),(2,2) -> row 2 = [0,1,1].
  CHECK(t2(2, 1) == doctest::Approx(e / (2 * e + 1)).epsilon(1e-12));
  CHECK(t2(2, 0) == doctest::Approx(1 / (2 * e + 1)).epsilon(1e-12));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const WarpingMatrix r = dtw_target(testing::random_series(rng, 8, 2), testing::random_series(rng, 8, 2));
    for (std::size_t i = 0; i < 8; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < 8; ++j) sum += r(i, j);
      CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
  }
}

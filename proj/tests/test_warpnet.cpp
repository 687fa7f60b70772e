#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "warp/warpnet.hpp"

using namespace warp;

namespace {

void check_row_stochastic(const WarpingMatrix& p, double tol = 1e-6) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) sum += p(i, j);
    CHECK(std::abs(sum - 1.0) <= tol);
  }
}

WarpingMatrix identity(std::size_t w) {
  Matrix m(w, w);
  for (std::size_t i = 0; i < w; ++i) m(i, i) = 1.0;
  return WarpingMatrix(std::move(m), true);
}

}  // namespace

TEST_CASE("row softmax closed forms") {
  const WarpingMatrix u = row_softmax(Matrix(3, 3, 4.2));
  for (double v : u.entries().data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const WarpingMatrix q = row_softmax(Matrix(2, 2, std::vector<double>{0.0, std::log(3.0), 0.0, std::log(3.0)}));
  CHECK(q(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(q(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(row_softmax(Matrix(2, 2, std::nan(""))), Error);
}

TEST_CASE("row softmax is shift invariant and stable for large logits") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = testing::random_matrix(rng, 6, 6, -5.0, 5.0);
    Matrix shifted = m;
    const double c = std::uniform_real_distribution<double>(-100.0, 100.0)(rng);
    for (double& v : shifted.data()) v += c;
    const auto a = row_softmax(m);
    const auto b = row_softmax(shifted);
    for (std::size_t i = 0; i < 36; ++i) CHECK(std::abs(a.entries().data()[i] - b.entries().data()[i]) <= 1e-9);
    check_row_stochastic(a);
  }
  check_row_stochastic(row_softmax(Matrix(4, 4, 1e6)));
}

TEST_CASE("make_paths") {
  std::mt19937_64 rng(2);
  Matrix sym = testing::random_matrix(rng, 5, 5, -2.0, 2.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < i; ++j) sym(i, j) = sym(j, i);
  const WarpPaths sp = make_paths(sym);
  CHECK(sp.source.entries() == sp.target.entries());

  const std::size_t w = 6;
  Matrix diag(w, w);
  for (std::size_t i = 0; i < w; ++i) diag(i, i) = 10.0;
  const WarpPaths dp = make_paths(diag);
  for (const auto* p : {&dp.source, &dp.target}) {
    for (std::size_t i = 0; i < w; ++i) {
      double off = 0.0;
      for (std::size_t j = 0; j < w; ++j)
        if (j != i) off += (*p)(i, j);
      CHECK(off < std::exp(-10.0) * static_cast<double>(w));
    }
  }

  const Matrix m = testing::random_matrix(rng, 7, 7, -3.0, 3.0);
  const WarpPaths mp = make_paths(m);
  check_row_stochastic(mp.source);
  check_row_stochastic(mp.target);
  CHECK(mp.target.entries() == row_softmax(m.transposed()).entries());
}

TEST_CASE("warp is a convex combination of rows") {
  std::mt19937_64 rng(3);
  const auto x = testing::random_series(rng, 8, 3);
  const TimeSeries same = warp::warp(identity(8), x);
  CHECK(same == x);

  const TimeSeries avg = warp::warp(row_softmax(Matrix(8, 8, 0.0)), x);
  for (std::size_t k = 0; k < 3; ++k) {
    double mean = 0.0;
    for (std::size_t t = 0; t < 8; ++t) mean += x(t, k);
    mean /= 8.0;
    for (std::size_t t = 0; t < 8; ++t) CHECK(avg(t, k) == doctest::Approx(mean).epsilon(1e-12));
  }

  for (int trial = 0; trial < 50; ++trial) {
    const auto p = row_softmax(testing::random_matrix(rng, 8, 8, -4.0, 4.0));
    const TimeSeries y = warp::warp(p, x);
    for (std::size_t k = 0; k < 3; ++k) {
      double lo = 1e300, hi = -1e300;
      for (std::size_t t = 0; t < 8; ++t) lo = std::min(lo, x(t, k)), hi = std::max(hi, x(t, k));
      for (std::size_t t = 0; t < 8; ++t) {
        CHECK(y(t, k) >= lo - 1e-12);
        CHECK(y(t, k) <= hi + 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(warp::warp(WarpingMatrix(Matrix(8, 8, 2.0), false), x), Error);
  CHECK_THROWS_AS(warp::warp(identity(4), x), Error);
}

TEST_CASE("pair distance") {
  std::mt19937_64 rng(4);
  const auto a = testing::random_series(rng, 5, 2);
  CHECK(pair_distance(a, a, identity(5), identity(5)) == 0.0);

  const TimeSeries one_a(1, 1, {2.0});
  const TimeSeries one_b(1, 1, {5.0});
  CHECK(pair_distance(one_a, one_b, identity(1), identity(1)) == doctest::Approx(9.0));

  const auto b = testing::random_series(rng, 5, 2);
  const auto ps = row_softmax(testing::random_matrix(rng, 5, 5, -2, 2));
  const auto pt = row_softmax(testing::random_matrix(rng, 5, 5, -2, 2));
  CHECK(pair_distance(a, b, ps, pt) == doctest::Approx(pair_distance(b, a, pt, ps)).epsilon(1e-14));
  CHECK(pair_distance(a, b, ps, pt) >= 0.0);

  // d = 0 exactly when both warps reproduce their targets: a constant series
  // is reproduced by any row-stochastic warp of itself.
  const TimeSeries flat(5, 2, std::vector<double>(10, 1.5));
  CHECK(pair_distance(flat, flat, ps, pt) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(pair_distance(a, b, ps, pt) > 0.0);
}

TEST_CASE("contrastive loss") {
  std::mt19937_64 rng(5);
  const auto x = testing::random_series(rng, 4, 2);
  CHECK(contrastive_loss(x, x, 1, 1.0) == 0.0);
  const TimeSeries zero(1, 1, {0.0});
  const TimeSeries half(1, 1, {0.5});
  CHECK(contrastive_loss(zero, half, 0, 1.0) == doctest::Approx(0.75));
  CHECK(contrastive_loss(zero, half, 1, 1.0) == doctest::Approx(0.25));
  const TimeSeries far(1, 1, {std::sqrt(2.0)});
  CHECK(contrastive_loss(zero, far, 0, 1.0) == 0.0);
  CHECK_THROWS_AS(contrastive_loss(zero, x, 1, 1.0), Error);
}

TEST_CASE("training loss") {
  std::mt19937_64 rng(6);
  const auto a = testing::random_series(rng, 4, 2);
  CHECK(training_loss(a, a, identity(4), identity(4), 1, 1.0) == 0.0);
  const TimeSeries far_a(2, 1, {0.0, 0.0});
  const TimeSeries far_b(2, 1, {3.0, 3.0});
  CHECK(training_loss(far_a, far_b, identity(2), identity(2), 0, 1.0) == 0.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto b = testing::random_series(rng, 4, 2);
    const auto paths = make_paths(testing::random_matrix(rng, 4, 4, -3, 3));
    CHECK(training_loss(a, b, paths.source, paths.target, trial % 2, 1.0) >= 0.0);
  }
}

TEST_CASE("pretrain loss") {
  std::mt19937_64 rng(7);
  const auto p = row_softmax(testing::random_matrix(rng, 5, 5, -1, 1));
  CHECK(pretrain_loss(p, p) == 0.0);
  CHECK(pretrain_loss(identity(1), identity(1)) == 0.0);
  const auto half = row_softmax(Matrix(2, 2, 0.0));
  Matrix eye(2, 2);
  eye(0, 0) = eye(1, 1) = 1.0;
  const auto dtw_like = row_softmax(eye);
  const double e = std::exp(1.0);
  const double d = e / (e + 1.0) - 0.5;
  CHECK(pretrain_loss(half, dtw_like) == doctest::Approx(d * d).epsilon(1e-12));
  CHECK(pretrain_loss(half, dtw_like) == doctest::Approx(0.05341).epsilon(1e-3));
  CHECK_THROWS_AS(pretrain_loss(half, identity(3)), Error);
}

TEST_CASE("hinge-saturated pairs contribute no gradient") {
  const TimeSeries a(4, 1, {0, 0, 0, 0});
  const TimeSeries b(4, 1, {5, 5, 5, 6});
  std::mt19937_64 rng(8);
  const Matrix p = testing::random_matrix(rng, 4, 4, -1, 1);
  const LossGrad lg = training_loss_grad(a, b, p, 0, 1.0);
  CHECK(lg.loss == 0.0);
  for (double v : lg.grad_p_raw.data()) CHECK(v == 0.0);
  const LossGrad pull = training_loss_grad(a, b, p, 1, 1.0);
  CHECK(pull.loss > 0.0);
}

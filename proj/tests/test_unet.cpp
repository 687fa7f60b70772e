#include <cmath>
#include <random>

#include "doctest.h"
#include "test_support.hpp"
#include "warp/kernels.hpp"
#include "warp/unet.hpp"

using namespace warp;

namespace {

UNetParams random_params(const UNetArch& arch, std::uint64_t seed, double bias_scale = 0.1) {
  UNetParams p = UNetParams::he_init(arch, seed);
  std::mt19937_64 rng(seed + 1000);
  std::normal_distribution<double> normal(0.0, bias_scale);
  for (const auto& l : p.layers())
    for (std::size_t c = 0; c < l.out_channels; ++c) p.values()[l.bias_offset + c] = normal(rng);
  return p;
}

// Direct zero-padded 3x3 convolution, one output at a time.
FeatureMap naive_conv(const FeatureMap& in, std::span<const double> w, std::span<const double> b) {
  FeatureMap out(b.size(), in.height, in.width);
  for (std::size_t co = 0; co < b.size(); ++co)
    for (std::size_t y = 0; y < in.height; ++y)
      for (std::size_t x = 0; x < in.width; ++x) {
        double acc = b[co];
        for (std::size_t ci = 0; ci < in.channels; ++ci)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const long yy = static_cast<long>(y) + dy;
              const long xx = static_cast<long>(x) + dx;
              if (yy < 0 || xx < 0 || yy >= static_cast<long>(in.height) || xx >= static_cast<long>(in.width)) continue;
              acc += w[((co * in.channels + ci) * 3 + (dy + 1)) * 3 + (dx + 1)] *
                     in.at(ci, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
        out.at(co, y, x) = acc;
      }
  return out;
}

FeatureMap random_map(std::mt19937_64& rng, std::size_t c, std::size_t h, std::size_t w) {
  FeatureMap m(c, h, w);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : m.data) v = normal(rng);
  return m;
}

}  // namespace

TEST_CASE("outer concatenation layout") {
  const TimeSeries a(2, 1, {1, 2});
  const TimeSeries b(2, 1, {3, 4});
  const OuterConcat oc = outer_concat(a, b);
  CHECK(oc.tensor.channels == 2);
  CHECK(oc.tensor.at(0, 0, 0) == 1);
  CHECK(oc.tensor.at(1, 0, 0) == 3);
  CHECK(oc.tensor.at(0, 0, 1) == 1);
  CHECK(oc.tensor.at(1, 0, 1) == 4);
  CHECK(oc.tensor.at(0, 1, 0) == 2);
  CHECK(oc.tensor.at(1, 1, 0) == 3);
  CHECK(oc.tensor.at(0, 1, 1) == 2);
  CHECK(oc.tensor.at(1, 1, 1) == 4);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t w = 1 + trial;
    const std::size_t k = 1 + trial % 3;
    const auto s = testing::random_series(rng, w, k);
    const auto self = outer_concat(s, s);
    CHECK(self.tensor.channels == 2 * k);
    CHECK(self.tensor.height == w);
    CHECK(self.tensor.width == w);
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t c = 0; c < k; ++c) CHECK(self.tensor.at(c, i, i) == self.tensor.at(k + c, i, i));
  }
}

TEST_CASE("architecture presets have the configured depths") {
  const UNetArch s = UNetArch::small(2);
  CHECK(s.encoder_layer_count() == 7);
  CHECK(s.decoder_layer_count() == 7);
  CHECK(s.length_divisor() == 4);
  const UNetArch l = UNetArch::large(64);
  CHECK(l.encoder_layer_count() == 8);
  CHECK(l.decoder_layer_count() == 8);
  const UNetArch s2 = UNetArch::small(2, {8, 16});
  CHECK(s2.encoder_layer_count() == 7);
  CHECK(s2.decoder_layer_count() == 7);
  CHECK(conv_layout(s).size() == 14);
  CHECK(conv_layout(s).front().in_channels == 4);
  CHECK(conv_layout(s).back().out_channels == 1);
  CHECK_FALSE(conv_layout(s).back().relu);
  UNetArch bad = s;
  bad.decoder_convs.push_back(1);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("conv3x3 matches the direct definition") {
  std::mt19937_64 rng(2);
  for (std::size_t size : {1u, 2u, 5u, 8u}) {
    const FeatureMap in = random_map(rng, 3, size, size + 1);
    std::vector<double> w(4 * 3 * 9);
    std::vector<double> b(4);
    std::normal_distribution<double> normal;
    for (double& v : w) v = normal(rng);
    for (double& v : b) v = normal(rng);
    FeatureMap out;
    conv3x3_forward(in, w, b, out);
    const FeatureMap ref = naive_conv(in, w, b);
    for (std::size_t i = 0; i < ref.data.size(); ++i) CHECK(out.data[i] == doctest::Approx(ref.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv3x3 backward is the adjoint of forward") {
  std::mt19937_64 rng(3);
  const FeatureMap in = random_map(rng, 3, 6, 6);
  const FeatureMap g = random_map(rng, 2, 6, 6);
  std::vector<double> w(2 * 3 * 9);
  std::normal_distribution<double> normal;
  for (double& v : w) v = normal(rng);
  const std::vector<double> zero_bias(2, 0.0);
  FeatureMap out;
  conv3x3_forward(in, w, zero_bias, out);
  std::vector<double> gw(w.size(), 0.0);
  std::vector<double> gb(2, 0.0);
  FeatureMap gin;
  conv3x3_backward(in, w, g, gw, gb, &gin);
  double lhs = 0.0, via_in = 0.0, via_w = 0.0, gsum = 0.0;
  for (std::size_t i = 0; i < out.data.size(); ++i) lhs += out.data[i] * g.data[i], gsum += g.data[i];
  for (std::size_t i = 0; i < in.data.size(); ++i) via_in += gin.data[i] * in.data[i];
  for (std::size_t i = 0; i < w.size(); ++i) via_w += gw[i] * w[i];
  CHECK(lhs == doctest::Approx(via_in).epsilon(1e-12));
  CHECK(lhs == doctest::Approx(via_w).epsilon(1e-12));
  CHECK(gb[0] + gb[1] == doctest::Approx(gsum).epsilon(1e-12));
}

TEST_CASE("zero weights and biases give zero output") {
  const UNetParams zero(UNetArch::small(2, {4, 8, 8}));
  std::mt19937_64 rng(4);
  const auto a = testing::random_series(rng, 8, 2);
  const Matrix p = unet_forward(zero, a, a);
  CHECK(p == Matrix(8, 8));
  const TimeSeries za(8, 2, std::vector<double>(16, 0.0));
  CHECK(unet_forward(zero, za, za) == Matrix(8, 8));
}

TEST_CASE("forward is bit-reproducible") {
  const UNetParams p = random_params(UNetArch::small(2, {4, 8, 8}), 77);
  std::mt19937_64 rng(5);
  const auto a = testing::random_series(rng, 16, 2);
  const auto b = testing::random_series(rng, 16, 2);
  CHECK(unet_forward(p, a, b) == unet_forward(p, a, b));
  CHECK(UNetParams::he_init(p.arch(), 3) == UNetParams::he_init(p.arch(), 3));
}

TEST_CASE("fused first layer equals the network on the explicit outer concat") {
  std::mt19937_64 rng(6);
  for (std::size_t k : {1u, 2u, 5u}) {
    for (std::size_t w : {4u, 8u, 12u}) {
      const UNetParams p = random_params(UNetArch::small(k, {4, 6, 8}), 10 * k + w);
      const auto a = testing::random_series(rng, w, k);
      const auto b = testing::random_series(rng, w, k);
      const Matrix fused = unet_forward(p, a, b);
      const Matrix generic = unet_forward(outer_concat(a, b), p);
      for (std::size_t i = 0; i < fused.size(); ++i) {
        CHECK(std::abs(fused.data()[i] - generic.data()[i]) <= 1e-10 * (1.0 + std::abs(generic.data()[i])));
      }
    }
  }
  // Single-level network, W = 1 exercises both image borders at once.
  const UNetArch one{1, {3}, {2}, {}};
  const UNetParams p = random_params(one, 9);
  const TimeSeries a(1, 1, {0.5});
  const TimeSeries b(1, 1, {-1.5});
  CHECK(unet_forward(p, a, b)(0, 0) == doctest::Approx(unet_forward(outer_concat(a, b), p)(0, 0)).epsilon(1e-12));
}

TEST_CASE("scalar and SIMD kernel tables give the same network outputs and gradients") {
  std::vector<const kernels::KernelTable*> tables{&kernels::scalar_table()};
  if (auto* t = kernels::avx2_table()) tables.push_back(t);
  if (auto* t = kernels::neon_table()) tables.push_back(t);
  const UNetParams p = random_params(UNetArch::small(3, {4, 8, 8}), 21);
  std::mt19937_64 rng(7);
  const auto a = testing::random_series(rng, 16, 3);
  const auto b = testing::random_series(rng, 16, 3);
  const Matrix g = testing::random_matrix(rng, 16, 16, -1.0, 1.0);
  std::vector<Matrix> outs;
  std::vector<std::vector<double>> grads;
  for (const auto* t : tables) {
    kernels::ScopedTableOverride use(*t);
    ForwardTape tape;
    outs.push_back(unet_forward(p, a, b, &tape));
    grads.push_back(unet_backward(p, tape, g));
  }
  for (std::size_t t = 1; t < tables.size(); ++t) {
    CAPTURE(tables[t]->name);
    for (std::size_t i = 0; i < outs[0].size(); ++i)
      CHECK(std::abs(outs[t].data()[i] - outs[0].data()[i]) <= 1e-10 * (1.0 + std::abs(outs[0].data()[i])));
    for (std::size_t i = 0; i < grads[0].size(); ++i)
      CHECK(std::abs(grads[t][i] - grads[0][i]) <= 1e-9 * (1.0 + std::abs(grads[0][i])));
  }
}

TEST_CASE("forward rejects incompatible inputs") {
  const UNetParams p(UNetArch::small(2));
  std::mt19937_64 rng(8);
  const auto a10 = testing::random_series(rng, 10, 2);
  CHECK_THROWS_AS(unet_forward(p, a10, a10), Error);  // 10 % 4 != 0
  const auto a3 = testing::random_series(rng, 8, 3);
  CHECK_THROWS_AS(unet_forward(p, a3, a3), Error);
  CHECK_THROWS_AS(UNetParams(UNetArch::small(2), std::vector<double>(5, 0.0)), Error);
}

TEST_CASE("backward without a recorded forward pass") {
  const UNetParams p(UNetArch::small(2, {4, 4, 4}));
  ForwardTape tape;
  try {
    unet_backward(p, tape, Matrix(8, 8));
    FAIL("expected GraphNotRecorded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kGraphNotRecorded);
  }
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "warp/core.hpp"

namespace warp {

// C x H x W activation volume, channel-major.
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  std::size_t plane() const noexcept { return height * width; }
  double* channel(std::size_t c) { return data.data() + c * plane(); }
  const double* channel(std::size_t c) const { return data.data() + c * plane(); }
  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
};

// W x W x 2K tensor: cell (i, j) holds a_i in channels [0, K) and b_j in
// channels [K, 2K). Stored channel-major as a FeatureMap.
struct OuterConcat {
  FeatureMap tensor;
  std::size_t dims = 0;  // K
};

OuterConcat outer_concat(const TimeSeries& a, const TimeSeries& b);

// U-Net topology. Level l has channels[l] feature maps; levels are separated
// by 2x2 max-pooling. Encoder level l feeds decoder level l by channel
// concatenation. Each decoder level starts with nearest x2 upsampling + conv,
// then decoder_convs[l] convs over the concatenated maps. A final linear
// 3x3 conv produces one channel.
struct UNetArch {
  std::size_t input_dims = 1;                 // K
  std::vector<std::size_t> channels;          // one per level
  std::vector<std::size_t> encoder_convs;     // one per level, each >= 1
  std::vector<std::size_t> decoder_convs;     // one per non-bottom level, each >= 1

  std::size_t levels() const noexcept { return channels.size(); }
  std::size_t pooling_stages() const noexcept { return levels() - 1; }
  // Required divisor of W.
  std::size_t length_divisor() const noexcept { return std::size_t{1} << pooling_stages(); }
  std::size_t encoder_layer_count() const;
  std::size_t decoder_layer_count() const;

  void validate() const;
  void check_length(std::size_t length) const;

  // Seven encoder and seven decoder convolutions.
  static UNetArch small(std::size_t dims, std::vector<std::size_t> channels = {16, 32, 64});
  // Eight encoder and eight decoder convolutions.
  static UNetArch large(std::size_t dims, std::vector<std::size_t> channels = {16, 32, 64});
  // One conv per stage; used for gradient checks and quick tests.
  static UNetArch tiny(std::size_t dims, std::vector<std::size_t> channels);

  friend bool operator==(const UNetArch&, const UNetArch&) = default;
};

struct ConvShape {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  bool relu = true;
  std::size_t weight_offset = 0;  // into UNetParams::values, [out][in][3][3]
  std::size_t bias_offset = 0;

  std::size_t weight_count() const noexcept { return out_channels * in_channels * 9; }
};

std::vector<ConvShape> conv_layout(const UNetArch& arch);

// All learnable weights, flattened into one contiguous vector.
class UNetParams {
 public:
  UNetParams() = default;
  // Zero-initialized parameters.
  explicit UNetParams(UNetArch arch);
  UNetParams(UNetArch arch, std::vector<double> values);

  // He-normal weights, zero biases.
  static UNetParams he_init(const UNetArch& arch, std::uint64_t seed);

  const UNetArch& arch() const noexcept { return arch_; }
  const std::vector<ConvShape>& layers() const noexcept { return layers_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool all_finite() const;

  friend bool operator==(const UNetParams& l, const UNetParams& r) {
    return l.arch_ == r.arch_ && l.values_ == r.values_;
  }

 private:
  UNetArch arch_;
  std::vector<ConvShape> layers_;
  std::vector<double> values_;
};

// Activations recorded by a forward pass for the backward pass.
struct ForwardTape {
  bool recorded = false;
  std::vector<FeatureMap> inputs;   // per op, the op input (when needed)
  std::vector<FeatureMap> outputs;  // per op, the op output (conv only)
  std::vector<std::vector<std::uint32_t>> argmax;  // per op, pooling winners
  Matrix series_a;
  Matrix series_b;
};

// Raw warping matrix P from a pair. The first convolution is evaluated
// directly from the two series without materializing the outer concat.
Matrix unet_forward(const UNetParams& params, const TimeSeries& a, const TimeSeries& b,
                    ForwardTape* tape = nullptr);

// Same network evaluated on an explicit outer concatenation.
Matrix unet_forward(const OuterConcat& x, const UNetParams& params);

// d loss / d params given d loss / d P. Throws kGraphNotRecorded when the
// tape holds no forward pass.
std::vector<double> unet_backward(const UNetParams& params, const ForwardTape& tape,
                                  const Matrix& grad_p);

// Exposed for tests: 3x3 same-padding convolution and its adjoints.
void conv3x3_forward(const FeatureMap& in, std::span<const double> weights,
                     std::span<const double> bias, FeatureMap& out);
void conv3x3_backward(const FeatureMap& in, std::span<const double> weights, const FeatureMap& grad_out,
                      std::span<double> grad_weights, std::span<double> grad_bias,
                      FeatureMap* grad_in);

}  // namespace warp

#include "warp/unet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "warp/kernels.hpp"

namespace warp {

OuterConcat outer_concat(const TimeSeries& a, const TimeSeries& b) {
  validate_pair(a, b);
  const std::size_t w = a.length();
  const std::size_t k = a.dims();
  OuterConcat out{FeatureMap(2 * k, w, w), k};
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < w; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        out.tensor.at(c, i, j) = a(i, c);
        out.tensor.at(k + c, i, j) = b(j, c);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Architecture

std::size_t UNetArch::encoder_layer_count() const {
  std::size_t n = 0;
  for (auto c : encoder_convs) n += c;
  return n;
}

std::size_t UNetArch::decoder_layer_count() const {
  std::size_t n = pooling_stages() + 1;  // up-convs + final output conv
  for (auto c : decoder_convs) n += c;
  return n;
}

void UNetArch::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kArchitectureMismatch, why); };
  if (input_dims == 0) fail("input_dims must be >= 1");
  if (channels.empty()) fail("at least one level required");
  if (encoder_convs.size() != levels()) fail("encoder_convs must have one entry per level");
  if (decoder_convs.size() != pooling_stages()) fail("decoder_convs must have levels-1 entries");
  for (auto c : channels)
    if (c == 0) fail("channel counts must be >= 1");
  for (auto c : encoder_convs)
    if (c == 0) fail("each encoder level needs >= 1 conv");
  for (auto c : decoder_convs)
    if (c == 0) fail("each decoder level needs >= 1 conv");
}

void UNetArch::check_length(std::size_t length) const {
  if (length == 0 || length % length_divisor() != 0) {
    std::ostringstream msg;
    msg << "W=" << length << " is not divisible by " << length_divisor();
    throw Error(ErrorCode::kArchitectureMismatch, msg.str());
  }
}

UNetArch UNetArch::small(std::size_t dims, std::vector<std::size_t> channels) {
  UNetArch arch{dims, std::move(channels), {}, {}};
  const std::size_t levels = arch.channels.size();
  // 2 convs per level and 3 at the bottom; mirrored decoder.
  arch.encoder_convs.assign(levels, 2);
  arch.encoder_convs.back() = 3;
  arch.decoder_convs.assign(levels - 1, 2);
  // Keep 7 + 7 for other depths by moving the remainder into the bottom level.
  const std::size_t enc = arch.encoder_layer_count();
  if (enc < 7) arch.encoder_convs.back() += 7 - enc;
  const std::size_t dec = arch.decoder_layer_count();
  if (dec < 7 && !arch.decoder_convs.empty()) arch.decoder_convs.front() += 7 - dec;
  arch.validate();
  return arch;
}

UNetArch UNetArch::large(std::size_t dims, std::vector<std::size_t> channels) {
  UNetArch arch = small(dims, std::move(channels));
  arch.encoder_convs.back() += 1;
  if (!arch.decoder_convs.empty()) arch.decoder_convs.back() += 1;
  arch.validate();
  return arch;
}

UNetArch UNetArch::tiny(std::size_t dims, std::vector<std::size_t> channels) {
  UNetArch arch{dims, std::move(channels), {}, {}};
  arch.encoder_convs.assign(arch.levels(), 1);
  arch.decoder_convs.assign(arch.pooling_stages(), 1);
  arch.validate();
  return arch;
}

// ---------------------------------------------------------------------------
// The network as a straight-line program, shared by forward and backward.

namespace {

enum class OpKind { kFusedConv, kConv, kSaveSkip, kPool, kUpsample, kConcatSkip };

struct Op {
  OpKind kind;
  std::size_t index;  // conv layer index or level
};

std::vector<Op> build_program(const UNetArch& arch) {
  std::vector<Op> ops;
  std::size_t layer = 0;
  for (std::size_t level = 0; level < arch.levels(); ++level) {
    if (level > 0) ops.push_back({OpKind::kPool, level});
    for (std::size_t c = 0; c < arch.encoder_convs[level]; ++c) {
      ops.push_back({layer == 0 ? OpKind::kFusedConv : OpKind::kConv, layer});
      ++layer;
    }
    if (level + 1 < arch.levels()) ops.push_back({OpKind::kSaveSkip, level});
  }
  for (std::size_t level = arch.levels() - 1; level-- > 0;) {
    ops.push_back({OpKind::kUpsample, level});
    ops.push_back({OpKind::kConv, layer++});
    ops.push_back({OpKind::kConcatSkip, level});
    for (std::size_t c = 0; c < arch.decoder_convs[level]; ++c) ops.push_back({OpKind::kConv, layer++});
  }
  ops.push_back({OpKind::kConv, layer++});
  return ops;
}

}  // namespace

std::vector<ConvShape> conv_layout(const UNetArch& arch) {
  arch.validate();
  std::vector<ConvShape> layers;
  auto add = [&](std::size_t in, std::size_t out, bool relu) {
    layers.push_back({in, out, relu, 0, 0});
  };
  std::size_t prev = 2 * arch.input_dims;
  for (std::size_t level = 0; level < arch.levels(); ++level) {
    for (std::size_t c = 0; c < arch.encoder_convs[level]; ++c) {
      add(prev, arch.channels[level], true);
      prev = arch.channels[level];
    }
  }
  for (std::size_t level = arch.levels() - 1; level-- > 0;) {
    add(prev, arch.channels[level], true);  // up-conv
    prev = 2 * arch.channels[level];        // after skip concat
    for (std::size_t c = 0; c < arch.decoder_convs[level]; ++c) {
      add(prev, arch.channels[level], true);
      prev = arch.channels[level];
    }
  }
  add(prev, 1, false);

  std::size_t offset = 0;
  for (auto& l : layers) {
    l.weight_offset = offset;
    offset += l.weight_count();
    l.bias_offset = offset;
    offset += l.out_channels;
  }
  return layers;
}

// ---------------------------------------------------------------------------
// Parameters

namespace {
std::size_t total_size(const std::vector<ConvShape>& layers) {
  return layers.empty() ? 0 : layers.back().bias_offset + layers.back().out_channels;
}
}  // namespace

UNetParams::UNetParams(UNetArch arch)
    : arch_(std::move(arch)), layers_(conv_layout(arch_)), values_(total_size(layers_), 0.0) {}

UNetParams::UNetParams(UNetArch arch, std::vector<double> values)
    : arch_(std::move(arch)), layers_(conv_layout(arch_)), values_(std::move(values)) {
  if (values_.size() != total_size(layers_)) {
    throw Error(ErrorCode::kArchitectureMismatch, "parameter count does not match architecture");
  }
  if (!all_finite()) throw Error(ErrorCode::kNonFiniteInput, "parameters contain NaN or Inf");
}

UNetParams UNetParams::he_init(const UNetArch& arch, std::uint64_t seed) {
  UNetParams params(arch);
  std::mt19937_64 rng(seed);
  for (const auto& layer : params.layers_) {
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / (9.0 * layer.in_channels)));
    for (std::size_t i = 0; i < layer.weight_count(); ++i) params.values_[layer.weight_offset + i] = normal(rng);
  }
  return params;
}

bool UNetParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Layer kernels

void conv3x3_forward(const FeatureMap& in, std::span<const double> weights, std::span<const double> bias,
                     FeatureMap& out) {
  const std::size_t h = in.height;
  const std::size_t w = in.width;
  const std::size_t cin = in.channels;
  const std::size_t cout = bias.size();
  out = FeatureMap(cout, h, w);
  for (std::size_t co = 0; co < cout; ++co) {
    double* dst = out.channel(co);
    std::fill(dst, dst + h * w, bias[co]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* src = in.channel(ci);
      const double* kern = weights.data() + (co * cin + ci) * 9;
      for (std::size_t dy = 0; dy < 3; ++dy) {
        const std::size_t y0 = dy == 0 ? 1 : 0;
        const std::size_t y1 = dy == 2 ? h - 1 : h;
        for (std::size_t dx = 0; dx < 3; ++dx) {
          const double k = kern[dy * 3 + dx];
          const std::size_t x0 = dx == 0 ? 1 : 0;
          const std::size_t x1 = dx == 2 ? w - 1 : w;
          if (k == 0.0 || x1 <= x0) continue;
          for (std::size_t y = y0; y < y1; ++y) {
            kernels::axpy(x1 - x0, k, src + (y + dy - 1) * w + x0 + dx - 1, dst + y * w + x0);
          }
        }
      }
    }
  }
}

void conv3x3_backward(const FeatureMap& in, std::span<const double> weights, const FeatureMap& grad_out,
                      std::span<double> grad_weights, std::span<double> grad_bias, FeatureMap* grad_in) {
  const std::size_t h = in.height;
  const std::size_t w = in.width;
  const std::size_t cin = in.channels;
  const std::size_t cout = grad_out.channels;
  if (grad_in != nullptr) *grad_in = FeatureMap(cin, h, w);
  for (std::size_t co = 0; co < cout; ++co) {
    const double* g = grad_out.channel(co);
    double bsum = 0.0;
    for (std::size_t p = 0; p < h * w; ++p) bsum += g[p];
    grad_bias[co] += bsum;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* src = in.channel(ci);
      const double* kern = weights.data() + (co * cin + ci) * 9;
      double* gk = grad_weights.data() + (co * cin + ci) * 9;
      double* gin = grad_in != nullptr ? grad_in->channel(ci) : nullptr;
      for (std::size_t dy = 0; dy < 3; ++dy) {
        const std::size_t y0 = dy == 0 ? 1 : 0;
        const std::size_t y1 = dy == 2 ? h - 1 : h;
        for (std::size_t dx = 0; dx < 3; ++dx) {
          const std::size_t x0 = dx == 0 ? 1 : 0;
          const std::size_t x1 = dx == 2 ? w - 1 : w;
          if (x1 <= x0) continue;
          const double k = kern[dy * 3 + dx];
          double acc = 0.0;
          for (std::size_t y = y0; y < y1; ++y) {
            const std::size_t src_off = (y + dy - 1) * w + x0 + dx - 1;
            acc += kernels::dot(x1 - x0, g + y * w + x0, src + src_off);
            if (gin != nullptr && k != 0.0) kernels::axpy(x1 - x0, k, g + y * w + x0, gin + src_off);
          }
          gk[dy * 3 + dx] += acc;
        }
      }
    }
  }
}

namespace {

// Valid kernel taps along one axis of length n at position p: tap d reads
// p + d - 1.
inline bool tap_valid(std::size_t p, std::size_t d, std::size_t n) {
  return p + d >= 1 && p + d - 1 < n;
}

// First convolution straight from the two series. Channels [0, K) of the
// outer concat only vary along rows and channels [K, 2K) only along columns,
// so each 3x3 tap collapses to a per-row or per-column term.
void fused_conv_forward(const Matrix& a, const Matrix& b, std::span<const double> weights,
                        std::span<const double> bias, FeatureMap& out) {
  const std::size_t w = a.rows();
  const std::size_t k = a.cols();
  const std::size_t cin = 2 * k;
  const std::size_t cout = bias.size();
  out = FeatureMap(cout, w, w);
  std::vector<double> row_tap(9 * w);  // [dy*3+dx][y'] projected a-part
  std::vector<double> col_tap(9 * w);  // [dy*3+dx][x'] projected b-part
  std::vector<double> row_term(3 * w);  // [dx][y] sum over valid dy
  std::vector<double> col_term(3 * w);  // [dy][x] sum over valid dx
  for (std::size_t co = 0; co < cout; ++co) {
    std::fill(row_tap.begin(), row_tap.end(), 0.0);
    std::fill(col_tap.begin(), col_tap.end(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const double* ka = weights.data() + (co * cin + c) * 9;
      const double* kb = weights.data() + (co * cin + k + c) * 9;
      for (std::size_t t = 0; t < 9; ++t) {
        for (std::size_t p = 0; p < w; ++p) {
          row_tap[t * w + p] += ka[t] * a(p, c);
          col_tap[t * w + p] += kb[t] * b(p, c);
        }
      }
    }
    std::fill(row_term.begin(), row_term.end(), 0.0);
    std::fill(col_term.begin(), col_term.end(), 0.0);
    for (std::size_t d = 0; d < 3; ++d) {
      for (std::size_t p = 0; p < w; ++p) {
        for (std::size_t e = 0; e < 3; ++e) {
          if (!tap_valid(p, e, w)) continue;
          row_term[d * w + p] += row_tap[(e * 3 + d) * w + p + e - 1];  // e = dy, d = dx
          col_term[d * w + p] += col_tap[(d * 3 + e) * w + p + e - 1];  // d = dy, e = dx
        }
      }
    }
    double* dst = out.channel(co);
    for (std::size_t y = 0; y < w; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double v = bias[co];
        for (std::size_t d = 0; d < 3; ++d) {
          if (tap_valid(x, d, w)) v += row_term[d * w + y];
          if (tap_valid(y, d, w)) v += col_term[d * w + x];
        }
        dst[y * w + x] = v;
      }
    }
  }
}

void fused_conv_backward(const Matrix& a, const Matrix& b, const FeatureMap& grad_out,
                         std::span<double> grad_weights, std::span<double> grad_bias) {
  const std::size_t w = a.rows();
  const std::size_t k = a.cols();
  const std::size_t cin = 2 * k;
  std::vector<double> row_sum(3 * w);  // [dx][y]: sum of g[y][x] over x where tap dx is valid
  std::vector<double> col_sum(3 * w);  // [dy][x]
  for (std::size_t co = 0; co < grad_out.channels; ++co) {
    const double* g = grad_out.channel(co);
    std::fill(row_sum.begin(), row_sum.end(), 0.0);
    std::fill(col_sum.begin(), col_sum.end(), 0.0);
    double bsum = 0.0;
    for (std::size_t y = 0; y < w; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double v = g[y * w + x];
        bsum += v;
        for (std::size_t d = 0; d < 3; ++d) {
          if (tap_valid(x, d, w)) row_sum[d * w + y] += v;
          if (tap_valid(y, d, w)) col_sum[d * w + x] += v;
        }
      }
    }
    grad_bias[co] += bsum;
    for (std::size_t c = 0; c < k; ++c) {
      double* ga = grad_weights.data() + (co * cin + c) * 9;
      double* gb = grad_weights.data() + (co * cin + k + c) * 9;
      for (std::size_t dy = 0; dy < 3; ++dy) {
        for (std::size_t dx = 0; dx < 3; ++dx) {
          double acc_a = 0.0;
          double acc_b = 0.0;
          for (std::size_t p = 0; p < w; ++p) {
            if (tap_valid(p, dy, w)) acc_a += row_sum[dx * w + p] * a(p + dy - 1, c);
            if (tap_valid(p, dx, w)) acc_b += col_sum[dy * w + p] * b(p + dx - 1, c);
          }
          ga[dy * 3 + dx] += acc_a;
          gb[dy * 3 + dx] += acc_b;
        }
      }
    }
  }
}

FeatureMap max_pool(const FeatureMap& in, std::vector<std::uint32_t>* argmax) {
  const std::size_t h = in.height / 2;
  const std::size_t w = in.width / 2;
  FeatureMap out(in.channels, h, w);
  if (argmax != nullptr) argmax->assign(out.data.size(), 0);
  for (std::size_t c = 0; c < in.channels; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        std::size_t best = (c * in.height + 2 * y) * in.width + 2 * x;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * in.height + 2 * y + dy) * in.width + 2 * x + dx;
            if (in.data[idx] > in.data[best]) best = idx;
          }
        }
        const std::size_t o = (c * h + y) * w + x;
        out.data[o] = in.data[best];
        if (argmax != nullptr) (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

FeatureMap upsample2(const FeatureMap& in) {
  FeatureMap out(in.channels, in.height * 2, in.width * 2);
  for (std::size_t c = 0; c < in.channels; ++c)
    for (std::size_t y = 0; y < out.height; ++y)
      for (std::size_t x = 0; x < out.width; ++x) out.at(c, y, x) = in.at(c, y / 2, x / 2);
  return out;
}

FeatureMap upsample2_backward(const FeatureMap& grad) {
  FeatureMap out(grad.channels, grad.height / 2, grad.width / 2);
  for (std::size_t c = 0; c < grad.channels; ++c)
    for (std::size_t y = 0; y < grad.height; ++y)
      for (std::size_t x = 0; x < grad.width; ++x) out.at(c, y / 2, x / 2) += grad.at(c, y, x);
  return out;
}

FeatureMap concat_channels(const FeatureMap& first, const FeatureMap& second) {
  FeatureMap out(first.channels + second.channels, first.height, first.width);
  std::copy(first.data.begin(), first.data.end(), out.data.begin());
  std::copy(second.data.begin(), second.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(first.data.size()));
  return out;
}

void check_activation(const FeatureMap& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteActivation, "activation became NaN or Inf");
  }
}

struct Runner {
  const UNetParams& params;
  ForwardTape* tape;
  std::vector<Op> program;

  std::span<const double> weights(std::size_t layer) const {
    const auto& l = params.layers()[layer];
    return params.values().subspan(l.weight_offset, l.weight_count());
  }
  std::span<const double> bias(std::size_t layer) const {
    const auto& l = params.layers()[layer];
    return params.values().subspan(l.bias_offset, l.out_channels);
  }

  // Runs the program; the first op either consumes `series` (fused) or the
  // explicit outer concat in `start`.
  Matrix run(const Matrix* a, const Matrix* b, FeatureMap start) {
    if (tape != nullptr) {
      tape->recorded = false;
      tape->inputs.assign(program.size(), FeatureMap{});
      tape->outputs.assign(program.size(), FeatureMap{});
      tape->argmax.assign(program.size(), {});
    }
    std::vector<FeatureMap> skips(params.arch().levels());
    FeatureMap cur = std::move(start);
    for (std::size_t s = 0; s < program.size(); ++s) {
      const Op& op = program[s];
      switch (op.kind) {
        case OpKind::kFusedConv:
        case OpKind::kConv: {
          FeatureMap out;
          if (op.kind == OpKind::kFusedConv && a != nullptr) {
            fused_conv_forward(*a, *b, weights(op.index), bias(op.index), out);
          } else {
            conv3x3_forward(cur, weights(op.index), bias(op.index), out);
          }
          if (params.layers()[op.index].relu) kernels::relu(out.data.size(), out.data.data());
          check_activation(out);
          if (tape != nullptr) {
            if (op.kind == OpKind::kConv) tape->inputs[s] = std::move(cur);
            tape->outputs[s] = out;
          }
          cur = std::move(out);
          break;
        }
        case OpKind::kSaveSkip:
          skips[op.index] = cur;
          break;
        case OpKind::kPool:
          if (tape != nullptr) {
            // Shape only; the winners index into the unpooled volume.
            FeatureMap& shape = tape->inputs[s];
            shape.channels = cur.channels;
            shape.height = cur.height;
            shape.width = cur.width;
          }
          cur = max_pool(cur, tape != nullptr ? &tape->argmax[s] : nullptr);
          break;
        case OpKind::kUpsample:
          cur = upsample2(cur);
          break;
        case OpKind::kConcatSkip:
          cur = concat_channels(skips[op.index], cur);
          break;
      }
    }
    if (tape != nullptr) tape->recorded = true;
    const std::size_t w = cur.height;
    return Matrix(w, w, std::move(cur.data));
  }
};

}  // namespace

Matrix unet_forward(const UNetParams& params, const TimeSeries& a, const TimeSeries& b, ForwardTape* tape) {
  validate_pair(a, b);
  if (a.dims() != params.arch().input_dims) {
    throw Error(ErrorCode::kArchitectureMismatch, "series dimension does not match model input_dims");
  }
  params.arch().check_length(a.length());
  if (tape != nullptr) {
    tape->series_a = a.values();
    tape->series_b = b.values();
  }
  Runner runner{params, tape, build_program(params.arch())};
  return runner.run(&a.values(), &b.values(), FeatureMap{});
}

Matrix unet_forward(const OuterConcat& x, const UNetParams& params) {
  if (x.dims != params.arch().input_dims || x.tensor.channels != 2 * x.dims ||
      x.tensor.height != x.tensor.width) {
    throw Error(ErrorCode::kArchitectureMismatch, "outer concat shape does not match model");
  }
  params.arch().check_length(x.tensor.height);
  Runner runner{params, nullptr, build_program(params.arch())};
  return runner.run(nullptr, nullptr, x.tensor);
}

std::vector<double> unet_backward(const UNetParams& params, const ForwardTape& tape, const Matrix& grad_p) {
  if (!tape.recorded) throw Error(ErrorCode::kGraphNotRecorded, "no forward pass recorded");
  const std::vector<Op> program = build_program(params.arch());
  if (tape.outputs.size() != program.size()) {
    throw Error(ErrorCode::kGraphNotRecorded, "tape was recorded for a different architecture");
  }
  const std::size_t w = tape.series_a.rows();
  if (grad_p.rows() != w || grad_p.cols() != w) {
    throw Error(ErrorCode::kShapeMismatch, "gradient shape does not match recorded output");
  }

  std::vector<double> grads(params.size(), 0.0);
  std::span<double> gspan(grads);
  std::vector<FeatureMap> skip_grads(params.arch().levels());
  FeatureMap g(1, w, w);
  g.data = grad_p.data();

  for (std::size_t s = program.size(); s-- > 0;) {
    const Op& op = program[s];
    switch (op.kind) {
      case OpKind::kFusedConv:
      case OpKind::kConv: {
        const auto& layer = params.layers()[op.index];
        if (layer.relu) kernels::relu_mask(g.data.size(), tape.outputs[s].data.data(), g.data.data());
        auto gw = gspan.subspan(layer.weight_offset, layer.weight_count());
        auto gb = gspan.subspan(layer.bias_offset, layer.out_channels);
        if (op.kind == OpKind::kFusedConv) {
          fused_conv_backward(tape.series_a, tape.series_b, g, gw, gb);
        } else {
          FeatureMap gin;
          const auto wts = params.values().subspan(layer.weight_offset, layer.weight_count());
          conv3x3_backward(tape.inputs[s], wts, g, gw, gb, &gin);
          g = std::move(gin);
        }
        break;
      }
      case OpKind::kSaveSkip: {
        const FeatureMap& extra = skip_grads[op.index];
        for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] += extra.data[i];
        break;
      }
      case OpKind::kPool: {
        const FeatureMap& shape = tape.inputs[s];
        FeatureMap gin(shape.channels, shape.height, shape.width);
        const auto& winners = tape.argmax[s];
        for (std::size_t i = 0; i < g.data.size(); ++i) gin.data[winners[i]] += g.data[i];
        g = std::move(gin);
        break;
      }
      case OpKind::kUpsample:
        g = upsample2_backward(g);
        break;
      case OpKind::kConcatSkip: {
        const std::size_t skip_c = params.arch().channels[op.index];
        const std::size_t plane = g.plane();
        FeatureMap skip(skip_c, g.height, g.width);
        FeatureMap rest(g.channels - skip_c, g.height, g.width);
        std::copy(g.data.begin(), g.data.begin() + static_cast<std::ptrdiff_t>(skip_c * plane), skip.data.begin());
        std::copy(g.data.begin() + static_cast<std::ptrdiff_t>(skip_c * plane), g.data.end(), rest.data.begin());
        skip_grads[op.index] = std::move(skip);
        g = std::move(rest);
        break;
      }
    }
  }
  return grads;
}

}  // namespace warp

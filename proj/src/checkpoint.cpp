#include "warp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string_view>

namespace warp {

namespace {

constexpr std::string_view kMagic = "WARPCKPT";

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U u = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}
  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(U));
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) u |= static_cast<U>(in_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return std::bit_cast<T>(u);
  }
  std::string_view view(std::size_t n) {
    need(n);
    std::string_view v(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw Error(ErrorCode::kParseError, "checkpoint truncated");
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t pos_ = 0;
};

// Sanity bound on stored counts before allocating.
constexpr std::uint64_t kMaxCount = 1u << 20;

std::uint64_t bounded(std::uint64_t v, const char* what) {
  if (v > kMaxCount) throw Error(ErrorCode::kParseError, std::string("implausible ") + what);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  const UNetArch& arch = ckpt.params.arch();
  Writer w;
  w.bytes(kMagic.data(), kMagic.size());
  w.le<std::uint32_t>(kCheckpointVersion);
  w.le<std::uint64_t>(ckpt.seed);
  w.le<std::uint64_t>(ckpt.step);
  w.le<std::uint64_t>(arch.input_dims);
  w.le<std::uint64_t>(arch.levels());
  for (auto c : arch.channels) w.le<std::uint64_t>(c);
  for (auto c : arch.encoder_convs) w.le<std::uint64_t>(c);
  for (auto c : arch.decoder_convs) w.le<std::uint64_t>(c);
  const auto& layers = ckpt.params.layers();
  w.le<std::uint64_t>(2 * layers.size());
  const auto values = ckpt.params.values();
  for (const auto& l : layers) {
    w.le<std::uint32_t>(4);
    for (auto d : {l.out_channels, l.in_channels, std::size_t{3}, std::size_t{3}}) w.le<std::uint64_t>(d);
    for (std::size_t i = 0; i < l.weight_count(); ++i) w.le<double>(values[l.weight_offset + i]);
    w.le<std::uint32_t>(1);
    w.le<std::uint64_t>(l.out_channels);
    for (std::size_t i = 0; i < l.out_channels; ++i) w.le<double>(values[l.bias_offset + i]);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (r.view(kMagic.size()) != kMagic) throw Error(ErrorCode::kParseError, "not a checkpoint file");
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kParseError, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.seed = r.le<std::uint64_t>();
  ckpt.step = r.le<std::uint64_t>();
  UNetArch arch;
  arch.input_dims = bounded(r.le<std::uint64_t>(), "input_dims");
  const std::uint64_t levels = bounded(r.le<std::uint64_t>(), "level count");
  if (levels == 0) throw Error(ErrorCode::kParseError, "checkpoint has no levels");
  for (std::uint64_t i = 0; i < levels; ++i) arch.channels.push_back(bounded(r.le<std::uint64_t>(), "channels"));
  for (std::uint64_t i = 0; i < levels; ++i) arch.encoder_convs.push_back(bounded(r.le<std::uint64_t>(), "convs"));
  for (std::uint64_t i = 0; i + 1 < levels; ++i) arch.decoder_convs.push_back(bounded(r.le<std::uint64_t>(), "convs"));
  arch.validate();
  const std::vector<ConvShape> layers = conv_layout(arch);

  const std::uint64_t tensors = r.le<std::uint64_t>();
  if (tensors != 2 * layers.size()) throw Error(ErrorCode::kArchitectureMismatch, "tensor count mismatch");
  std::vector<double> values;
  for (const auto& l : layers) {
    const std::vector<std::uint64_t> shapes[2] = {{l.out_channels, l.in_channels, 3, 3}, {l.out_channels}};
    for (const auto& expected : shapes) {
      const auto rank = r.le<std::uint32_t>();
      if (rank != expected.size()) throw Error(ErrorCode::kArchitectureMismatch, "tensor rank mismatch");
      std::uint64_t count = 1;
      for (std::uint32_t d = 0; d < rank; ++d) {
        const auto dim = r.le<std::uint64_t>();
        if (dim != expected[d]) throw Error(ErrorCode::kArchitectureMismatch, "tensor shape mismatch");
        count *= dim;
      }
      for (std::uint64_t i = 0; i < count; ++i) values.push_back(r.le<double>());
    }
  }
  if (!r.done()) throw Error(ErrorCode::kParseError, "trailing bytes after checkpoint");
  ckpt.params = UNetParams(std::move(arch), std::move(values));
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace warp

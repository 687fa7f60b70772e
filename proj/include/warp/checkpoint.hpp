#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "warp/unet.hpp"

namespace warp {

// Binary model file, all integers and floats little-endian:
//   "WARPCKPT" | u32 version | u64 seed | u64 step
//   u64 input_dims | u64 levels | u64 channels[levels]
//   u64 encoder_convs[levels] | u64 decoder_convs[levels-1]
//   u64 tensor_count | per tensor: u32 rank, u64 dims[rank], f64 data[prod(dims)]
// Tensors alternate conv weight [out, in, 3, 3] and bias [out], in layer order.
struct Checkpoint {
  UNetParams params;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace warp

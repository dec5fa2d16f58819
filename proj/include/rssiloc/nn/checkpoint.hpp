#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rssiloc/nn/layers.hpp"
#include "rssiloc/nn/tensor.hpp"

namespace rssiloc::nn {

// Parameter checkpoint, binary little-endian:
//   magic "RLCK", u32 version,
//   arch string, u32 window, u32 nodes, u32 n_bins,
//   u32 lstm layer count + u32 sizes,
//   u64 param count, then per parameter: name, u32 rank, u64 dims,
//   raw f64 values.
// Strings are u32 length + bytes. Save -> load round-trips bitwise.
struct CheckpointHeader {
  std::string arch;
  uint32_t window = 0;
  uint32_t nodes = 0;
  uint32_t n_bins = 0;
  std::vector<uint32_t> lstm_units;
};

struct NamedTensor {
  std::string name;
  Tensor value;
};

void save_checkpoint(const std::filesystem::path& file,
                     const CheckpointHeader& header,
                     const std::vector<Param*>& params);

struct Checkpoint {
  CheckpointHeader header;
  std::vector<NamedTensor> tensors;
};

Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace rssiloc::nn

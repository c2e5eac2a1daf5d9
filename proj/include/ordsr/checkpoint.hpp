#pragma once

#include <filesystem>
#include <optional>

#include "ordsr/optim.hpp"

// Binary checkpoint, all integers and doubles little-endian:
//
//   magic    8 bytes  "ORDSRCK1"
//   version  u32      1
//   N        u32      block size
//   D        u32      CNN depth
//   T        u32      threshold
//   epsilon  f64
//   gamma    f64
//   sigma    f64
//   epoch    u32      completed epochs
//   hidden   u32      CNN hidden width
//   scale    u32      training scale factor
//   mode     u32      0 full, 1 no-ortho, 2 frozen-bank
//   seed     u64
//   step     u64      Adam step counter
//   moments  u32      1 when optimizer moments follow
//   bank     N^4 f64  filters in index order, each N x N row-major
//   layers   D x (weights f64[out*in*9], bias f64[out])
//   [moments] m then v, each laid out as bank + layers
//
// A JSON sidecar (<file>.json) mirrors the header fields.
namespace ordsr::checkpoint {

struct Header {
  std::uint32_t version = 1;
  network::Architecture arch;
  double epsilon = 1e-3;
  double gamma = 1.0;
  double sigma = 1e-3;
  std::uint32_t epoch = 0;
  std::uint32_t scale = 2;
  optim::TrainMode mode = optim::TrainMode::Full;
  std::uint64_t seed = 0;
};

struct Checkpoint {
  Header header;
  network::NetworkParams params;
  std::optional<optim::AdamState> adam;
};

Header make_header(const optim::TrainConfig& cfg, int epoch);

void save(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Throws DataError on malformed or truncated files.
Checkpoint load(const std::filesystem::path& path);

/// Path of the JSON sidecar for a checkpoint file.
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// ConfigError when the checkpoint's architecture differs from cfg.
void require_compatible(const Header& header, const optim::TrainConfig& cfg);

}  // namespace ordsr::checkpoint

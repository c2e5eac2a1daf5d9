#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ordsr/dataio.hpp"
#include "ordsr/metrics.hpp"
#include "ordsr/network.hpp"
#include "ordsr/optim.hpp"

namespace ordsr::pipeline {

/// Runs the network on an upscaled luma plane of any size: edge-pads to the block size,
/// infers, crops back and clamps to [0, 1].
dataio::ImagePlane sr_luma(const dataio::ImagePlane& upscaled, const network::NetworkParams& params);

/// Color SR: luma through the network after bicubic upscaling, Cb/Cr bicubic only.
/// Gray input yields a gray result equal to the luma path.
dataio::Image sr_color(const dataio::Image& lr, const network::NetworkParams& params, int scale);

enum class LumaConvention { FullRange, Studio };

struct EvalOptions {
  int scale = 3;
  int shave = -1;  // -1: use scale
  LumaConvention luma = LumaConvention::FullRange;
};

struct EvalRow {
  std::string image;
  metrics::QualityReport sr;
  metrics::QualityReport bicubic;
};

/// HR image -> crop to a multiple of the scale, bicubic degrade, SR (when params are given),
/// metrics on the luma plane. Without params the SR columns repeat the bicubic ones.
EvalRow evaluate_image(const std::string& name, const dataio::Image& hr,
                       const network::NetworkParams* params, const EvalOptions& opts);

/// LR/HR luma pair cropped to a multiple of lcm(block, scale), for training-time validation.
optim::ValidationImage make_validation(const dataio::Image& hr, int scale, int block = 8);

// --- dataset preparation -------------------------------------------------------------

struct PrepareOptions {
  int scale = 2;
  bool augment = true;
  int patch_size = 40;
  int overlap = 10;
  std::uint64_t seed = 1;
  std::size_t max_patches = 0;  // 0: keep all; otherwise a seeded subset in source order
  int block = 8;
};

struct PreparedDataset {
  std::vector<dataio::PatchPair> patches;
  std::vector<std::filesystem::path> sources;
  std::vector<std::string> skipped;  // "path: reason"
  PrepareOptions options;
};

/// Patches from luma planes of the given images. Unreadable or too-small files are listed in
/// `skipped`.
PreparedDataset prepare_dataset(const std::vector<std::filesystem::path>& sources,
                                const PrepareOptions& opts);

/// Patches from already-loaded luma planes (source ids are the plane indices).
std::vector<dataio::PatchPair> make_patches(const std::vector<dataio::ImagePlane>& planes,
                                            const PrepareOptions& opts);

enum class StoreLayout { Packed, PerPair };

/// Writes the manifest JSON and the patch store next to it. Returns the manifest.
nlohmann::json write_dataset(const std::filesystem::path& manifest_path, const PreparedDataset& data,
                             StoreLayout layout = StoreLayout::Packed);

/// Loads patches referenced by a manifest; verifies every patch hash.
std::vector<dataio::PatchPair> load_dataset(const std::filesystem::path& manifest_path);

/// Image files (png/pgm/ppm) in a directory, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace ordsr::pipeline

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ordsr/tensor.hpp"

namespace ordsr::dataio {

enum class PlaneRole { Gray, Luma, Cb, Cr, Red, Green, Blue };

/// Single image channel, row-major, values in [0, 1].
struct ImagePlane {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  PlaneRole role = PlaneRole::Gray;

  ImagePlane() = default;
  ImagePlane(int h, int w, double fill = 0.0, PlaneRole r = PlaneRole::Gray);

  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return values.size(); }

  void clamp();
  /// (1, 1, H, W) tensor view copy.
  Tensor to_tensor() const;
  static ImagePlane from_tensor(const Tensor& t, std::size_t batch = 0, PlaneRole role = PlaneRole::Gray);
};

/// One (gray) or three (R, G, B) planes.
struct Image {
  std::vector<ImagePlane> planes;

  bool is_color() const { return planes.size() == 3; }
  int height() const { return planes.empty() ? 0 : planes[0].height; }
  int width() const { return planes.empty() ? 0 : planes[0].width; }
};

// --- file I/O -------------------------------------------------------------

/// PNG (any bit depth/color type), binary/ASCII PGM/PPM, or uncompressed BMP.
Image read_image(const std::filesystem::path& path);
/// 8-bit PNG with one or three planes; values are clamped and rounded.
void write_png(const std::filesystem::path& path, const Image& image);
void write_pgm(const std::filesystem::path& path, const ImagePlane& plane);

// --- color ----------------------------------------------------------------

struct YCbCr {
  ImagePlane y, cb, cr;
};

/// BT.601 full range; chroma centred on 0.5.
YCbCr rgb_to_ycbcr(const Image& rgb);
Image ycbcr_to_rgb(const YCbCr& planes);
/// Luma of any image: the plane itself for gray input.
ImagePlane luma(const Image& image);
/// BT.601 studio-range luma (16..235 in 8-bit) as used by common SR benchmark scripts.
ImagePlane luma_studio(const Image& image);

// --- resampling ---------------------------------------------------------------

/// Keys cubic kernel with a = -0.5.
double cubic_kernel(double x);

/// Separable bicubic resize to an explicit size. Downscaling widens the kernel by 1/scale
/// (antialias); samples outside the image are clamped to the edge.
ImagePlane resize(const ImagePlane& plane, int out_h, int out_w);
/// Output size is ceil(dim * scale).
ImagePlane bicubic_resize(const ImagePlane& plane, double scale);

/// Bicubic down by 1/s then up by s; output has the input's size. Requires dims divisible by s.
ImagePlane degrade(const ImagePlane& hr, int s);

/// Center crop so both dims are multiples of m.
ImagePlane crop_to_multiple(const ImagePlane& plane, int m = 8);
/// Edge-replicate pad on the bottom/right to multiples of m.
ImagePlane pad_to_multiple(const ImagePlane& plane, int m = 8);
ImagePlane crop(const ImagePlane& plane, int top, int left, int h, int w);

// --- augmentation and patches ---------------------------------------------

/// Counter-clockwise rotation by quarter_turns * 90 degrees.
ImagePlane rotate90(const ImagePlane& plane, int quarter_turns);

struct Variant {
  ImagePlane plane;
  int rotation_degrees;
  double scale;
  std::string tag;
};

inline const std::vector<int> kRotations = {0, 90, 180, 270};
inline const std::vector<double> kScales = {1.0, 0.9, 0.8, 0.7};

/// Rotation (0, 90, 180, 270) x scale (1.0, 0.9, 0.8, 0.7); rotate first, then scale.
std::vector<Variant> augment(const ImagePlane& image, bool enabled = true);

struct PatchProvenance {
  std::uint32_t source = 0;
  std::string variant;
  std::uint32_t y = 0;
  std::uint32_t x = 0;
};

struct PatchPair {
  ImagePlane lr;
  ImagePlane hr;
  PatchProvenance provenance;
};

/// Grid offsets 0, size-overlap, ... with the last offset clamped to the border.
std::vector<int> patch_offsets(int extent, int size, int overlap);

/// Empty when the image is smaller than one patch.
std::vector<PatchPair> extract_patches(const ImagePlane& lr, const ImagePlane& hr, int size = 40,
                                       int overlap = 10);

/// FNV-1a 64 over the raw bytes of both planes.
std::uint64_t patch_hash(const PatchPair& pair);

}  // namespace ordsr::dataio

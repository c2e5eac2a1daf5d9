#include "ordsr/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "ordsr/errors.hpp"

namespace ordsr::pipeline {

using dataio::Image;
using dataio::ImagePlane;

ImagePlane sr_luma(const ImagePlane& upscaled, const network::NetworkParams& params) {
  const ImagePlane padded = dataio::pad_to_multiple(upscaled, params.bank.n);
  const Tensor out = network::infer(padded.to_tensor(), params);
  ImagePlane sr = dataio::crop(ImagePlane::from_tensor(out, 0, dataio::PlaneRole::Luma), 0, 0,
                               upscaled.height, upscaled.width);
  sr.clamp();
  return sr;
}

Image sr_color(const Image& lr, const network::NetworkParams& params, int scale) {
  if (scale < 1) throw ParameterError("sr_color: scale must be >= 1");
  if (!lr.is_color()) {
    const ImagePlane y = dataio::luma(lr);
    Image out;
    out.planes.push_back(sr_luma(dataio::bicubic_resize(y, scale), params));
    out.planes[0].role = dataio::PlaneRole::Gray;
    return out;
  }
  auto planes = dataio::rgb_to_ycbcr(lr);
  dataio::YCbCr up{dataio::bicubic_resize(planes.y, scale), dataio::bicubic_resize(planes.cb, scale),
                   dataio::bicubic_resize(planes.cr, scale)};
  up.y = sr_luma(up.y, params);
  return dataio::ycbcr_to_rgb(up);
}

namespace {

ImagePlane eval_luma(const Image& image, LumaConvention luma) {
  return luma == LumaConvention::Studio ? dataio::luma_studio(image) : dataio::luma(image);
}

int lcm(int a, int b) { return a / std::gcd(a, b) * b; }

}  // namespace

EvalRow evaluate_image(const std::string& name, const Image& hr_image,
                       const network::NetworkParams* params, const EvalOptions& opts) {
  const int shave = opts.shave < 0 ? opts.scale : opts.shave;
  const ImagePlane hr = dataio::crop(eval_luma(hr_image, opts.luma), 0, 0,
                                     hr_image.height() / opts.scale * opts.scale,
                                     hr_image.width() / opts.scale * opts.scale);
  const ImagePlane bicubic = dataio::degrade(hr, opts.scale);
  EvalRow row;
  row.image = name;
  row.bicubic = {name, opts.scale, shave, metrics::psnr(bicubic, hr, 255.0, shave),
                 metrics::ssim(bicubic, hr, shave)};
  if (params != nullptr) {
    const ImagePlane sr = sr_luma(bicubic, *params);
    row.sr = {name, opts.scale, shave, metrics::psnr(sr, hr, 255.0, shave), metrics::ssim(sr, hr, shave)};
  } else {
    row.sr = row.bicubic;
  }
  return row;
}

optim::ValidationImage make_validation(const Image& hr_image, int scale, int block) {
  const ImagePlane hr = dataio::crop_to_multiple(dataio::luma(hr_image), lcm(block, scale));
  return {dataio::degrade(hr, scale), hr};
}

// --- dataset preparation ---------------------------------------------------------------

std::vector<dataio::PatchPair> make_patches(const std::vector<ImagePlane>& planes,
                                            const PrepareOptions& opts) {
  if (opts.scale < 1) throw ParameterError("prepare: scale must be >= 1");
  if (opts.patch_size % opts.block != 0) {
    throw ParameterError("prepare: patch size must be a multiple of the block size");
  }
  const int multiple = lcm(opts.block, opts.scale);
  std::vector<dataio::PatchPair> patches;
  for (std::size_t s = 0; s < planes.size(); ++s) {
    for (auto& variant : dataio::augment(planes[s], opts.augment)) {
      if (variant.plane.height < std::max(multiple, opts.patch_size) ||
          variant.plane.width < std::max(multiple, opts.patch_size)) {
        continue;
      }
      const ImagePlane hr = dataio::crop_to_multiple(variant.plane, multiple);
      const ImagePlane lr = dataio::degrade(hr, opts.scale);
      for (auto& pair : dataio::extract_patches(lr, hr, opts.patch_size, opts.overlap)) {
        pair.provenance.source = static_cast<std::uint32_t>(s);
        pair.provenance.variant = variant.tag;
        patches.push_back(std::move(pair));
      }
    }
  }
  if (opts.max_patches > 0 && patches.size() > opts.max_patches) {
    std::vector<std::size_t> order = optim::epoch_order(patches.size(), opts.seed, -1);
    order.resize(opts.max_patches);
    std::sort(order.begin(), order.end());
    std::vector<dataio::PatchPair> subset;
    subset.reserve(order.size());
    for (std::size_t i : order) subset.push_back(std::move(patches[i]));
    patches = std::move(subset);
  }
  return patches;
}

PreparedDataset prepare_dataset(const std::vector<std::filesystem::path>& sources,
                                const PrepareOptions& opts) {
  PreparedDataset out;
  out.options = opts;
  std::vector<ImagePlane> planes;
  for (const auto& path : sources) {
    try {
      const Image image = dataio::read_image(path);
      if (image.height() < opts.patch_size || image.width() < opts.patch_size) {
        out.skipped.push_back(path.string() + ": smaller than one patch");
        continue;
      }
      planes.push_back(dataio::luma(image));
      out.sources.push_back(path);
    } catch (const Error& e) {
      out.skipped.push_back(path.string() + ": " + e.what());
    }
  }
  out.patches = make_patches(planes, opts);
  return out;
}

namespace {

constexpr char kStoreMagic[8] = {'O', 'R', 'D', 'S', 'R', 'P', 'S', '1'};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_doubles(std::ofstream& out, const std::vector<double>& values) {
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

void read_doubles(std::ifstream& in, std::vector<double>& values, const std::string& name) {
  for (double& v : values) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      const int c = in.get();
      if (c == std::char_traits<char>::eof()) throw DataError("truncated patch store " + name);
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    v = std::bit_cast<double>(bits);
  }
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& name) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw DataError("truncated patch store " + name);
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

}  // namespace

nlohmann::json write_dataset(const std::filesystem::path& manifest_path, const PreparedDataset& data,
                             StoreLayout layout) {
  namespace fs = std::filesystem;
  const fs::path dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  fs::create_directories(dir);
  const std::string stem = manifest_path.stem().string();
  const int size = data.options.patch_size;

  nlohmann::json manifest;
  manifest["format"] = "ordsr-manifest";
  manifest["version"] = 1;
  manifest["scale"] = data.options.scale;
  manifest["augment"] = data.options.augment;
  manifest["rotations"] = data.options.augment ? dataio::kRotations : std::vector<int>{0};
  manifest["scales"] = data.options.augment ? dataio::kScales : std::vector<double>{1.0};
  manifest["patch_size"] = size;
  manifest["overlap"] = data.options.overlap;
  manifest["seed"] = data.options.seed;
  manifest["max_patches"] = data.options.max_patches;
  manifest["count"] = data.patches.size();
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : data.sources) sources.push_back(s.string());
  manifest["sources"] = sources;
  manifest["skipped"] = data.skipped;

  nlohmann::json entries = nlohmann::json::array();
  for (const auto& p : data.patches) {
    entries.push_back({{"source", p.provenance.source},
                       {"variant", p.provenance.variant},
                       {"y", p.provenance.y},
                       {"x", p.provenance.x},
                       {"hash", hex(dataio::patch_hash(p))}});
  }
  manifest["patches"] = entries;

  if (layout == StoreLayout::Packed) {
    const std::string store = stem + ".patches.bin";
    manifest["layout"] = "packed";
    manifest["store"] = store;
    std::ofstream out(dir / store, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write patch store " + (dir / store).string());
    out.write(kStoreMagic, sizeof kStoreMagic);
    write_u32(out, 1);
    write_u32(out, static_cast<std::uint32_t>(data.patches.size()));
    write_u32(out, static_cast<std::uint32_t>(size));
    for (std::size_t i = 0; i < data.patches.size(); ++i) {
      const auto& p = data.patches[i].provenance;
      write_u32(out, p.source);
      write_u32(out, p.y);
      write_u32(out, p.x);
      write_u32(out, static_cast<std::uint32_t>(i));
    }
    for (const auto& p : data.patches) {
      write_doubles(out, p.lr.values);
      write_doubles(out, p.hr.values);
    }
  } else {
    const std::string store = stem + ".pairs";
    manifest["layout"] = "per-pair";
    manifest["store"] = store;
    fs::create_directories(dir / store);
    for (std::size_t i = 0; i < data.patches.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "pair_%06zu.bin", i);
      std::ofstream out(dir / store / name, std::ios::binary | std::ios::trunc);
      write_doubles(out, data.patches[i].lr.values);
      write_doubles(out, data.patches[i].hr.values);
    }
  }
  std::ofstream out(manifest_path);
  if (!out) throw DataError("cannot write manifest " + manifest_path.string());
  out << manifest.dump(2) << "\n";
  return manifest;
}

std::vector<dataio::PatchPair> load_dataset(const std::filesystem::path& manifest_path) {
  namespace fs = std::filesystem;
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest " + manifest_path.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "ordsr-manifest") {
    throw DataError(manifest_path.string() + " is not an ORDSR manifest");
  }
  const fs::path dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
  const int size = manifest.at("patch_size").get<int>();
  const auto& entries = manifest.at("patches");
  const fs::path store = dir / manifest.at("store").get<std::string>();

  std::vector<dataio::PatchPair> patches(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& p = patches[i];
    p.lr = ImagePlane(size, size, 0.0, dataio::PlaneRole::Luma);
    p.hr = ImagePlane(size, size, 0.0, dataio::PlaneRole::Luma);
    p.provenance.source = entries[i].at("source").get<std::uint32_t>();
    p.provenance.variant = entries[i].at("variant").get<std::string>();
    p.provenance.y = entries[i].at("y").get<std::uint32_t>();
    p.provenance.x = entries[i].at("x").get<std::uint32_t>();
  }
  if (manifest.at("layout") == "packed") {
    std::ifstream data(store, std::ios::binary);
    if (!data) throw DataError("cannot open patch store " + store.string());
    char magic[8];
    if (!data.read(magic, sizeof magic) || std::memcmp(magic, kStoreMagic, sizeof magic) != 0) {
      throw DataError(store.string() + " is not an ORDSR patch store");
    }
    const std::string name = store.string();
    if (read_u32(data, name) != 1) throw DataError("unsupported patch store version");
    const std::uint32_t count = read_u32(data, name);
    const std::uint32_t stored_size = read_u32(data, name);
    if (count != patches.size() || static_cast<int>(stored_size) != size) {
      throw DataError("patch store " + name + " disagrees with its manifest");
    }
    for (std::uint32_t i = 0; i < count * 4; ++i) read_u32(data, name);
    for (auto& p : patches) {
      read_doubles(data, p.lr.values, name);
      read_doubles(data, p.hr.values, name);
    }
  } else {
    for (std::size_t i = 0; i < patches.size(); ++i) {
      char fname[32];
      std::snprintf(fname, sizeof fname, "pair_%06zu.bin", i);
      std::ifstream data(store / fname, std::ios::binary);
      if (!data) throw DataError("missing patch file " + (store / fname).string());
      read_doubles(data, patches[i].lr.values, fname);
      read_doubles(data, patches[i].hr.values, fname);
    }
  }
  for (std::size_t i = 0; i < patches.size(); ++i) {
    if (hex(dataio::patch_hash(patches[i])) != entries[i].at("hash").get<std::string>()) {
      throw DataError("patch " + std::to_string(i) + " hash mismatch in " + store.string());
    }
  }
  return patches;
}

std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".bmp") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ordsr::pipeline

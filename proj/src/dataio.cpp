#include "ordsr/dataio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ordsr/errors.hpp"

namespace ordsr::dataio {

ImagePlane::ImagePlane(int h, int w, double fill, PlaneRole r)
    : height(h), width(w), values(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill), role(r) {}

void ImagePlane::clamp() {
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
}

Tensor ImagePlane::to_tensor() const {
  return Tensor(Shape{1, 1, static_cast<std::size_t>(height), static_cast<std::size_t>(width)},
                values);
}

ImagePlane ImagePlane::from_tensor(const Tensor& t, std::size_t batch, PlaneRole role) {
  const Shape& s = t.shape();
  if (s.c != 1 || batch >= s.n) throw DimensionError("from_tensor: expected (N, 1, H, W) tensor");
  ImagePlane p(static_cast<int>(s.h), static_cast<int>(s.w), 0.0, role);
  const double* src = t.raw() + t.offset(batch, 0, 0, 0);
  std::copy(src, src + p.size(), p.values.begin());
  return p;
}

// --- file I/O ---------------------------------------------------------------

namespace {

bool has_extension(const std::filesystem::path& path, std::initializer_list<const char*> exts) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::any_of(exts.begin(), exts.end(), [&](const char* e) { return ext == e; });
}

Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.c_str()) == 0) {
    throw DataError("cannot read PNG " + path.string() + ": " + png.message);
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr) == 0) {
    png_image_free(&png);
    throw DataError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  const int h = static_cast<int>(png.height);
  const int w = static_cast<int>(png.width);
  Image image;
  for (int c = 0; c < channels; ++c) {
    image.planes.emplace_back(h, w, 0.0,
                              color ? static_cast<PlaneRole>(static_cast<int>(PlaneRole::Red) + c)
                                    : PlaneRole::Gray);
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
    for (int c = 0; c < channels; ++c) {
      image.planes[c].values[i] = buffer[i * channels + c] / 255.0;
    }
  }
  return image;
}

// Netpbm header token, skipping comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  const bool ascii = magic == "P2" || magic == "P3";
  const bool color = magic == "P3" || magic == "P6";
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw DataError("unsupported netpbm type '" + magic + "' in " + path.string());
  }
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(pnm_token(in));
    h = std::stoi(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    throw DataError("malformed netpbm header in " + path.string());
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) {
    throw DataError("invalid netpbm dimensions in " + path.string());
  }
  const int channels = color ? 3 : 1;
  Image image;
  for (int c = 0; c < channels; ++c) {
    image.planes.emplace_back(h, w, 0.0,
                              color ? static_cast<PlaneRole>(static_cast<int>(PlaneRole::Red) + c)
                                    : PlaneRole::Gray);
  }
  const std::size_t count = static_cast<std::size_t>(h) * w * channels;
  for (std::size_t i = 0; i < count; ++i) {
    int v = 0;
    if (ascii) {
      if (!(in >> v)) throw DataError("truncated netpbm data in " + path.string());
    } else if (maxval < 256) {
      char b;
      if (!in.get(b)) throw DataError("truncated netpbm data in " + path.string());
      v = static_cast<unsigned char>(b);
    } else {
      char b[2];
      if (!in.read(b, 2)) throw DataError("truncated netpbm data in " + path.string());
      v = (static_cast<unsigned char>(b[0]) << 8) | static_cast<unsigned char>(b[1]);
    }
    image.planes[i % channels].values[i / channels] = static_cast<double>(v) / maxval;
  }
  return image;
}

// Uncompressed 8-bit palette, 24-bit or 32-bit Windows bitmaps.
Image read_bmp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto u16 = [&](std::size_t o) { return static_cast<std::uint32_t>(bytes.at(o) | (bytes.at(o + 1) << 8)); };
  auto u32 = [&](std::size_t o) { return u16(o) | (u16(o + 2) << 16); };
  if (bytes.size() < 54 || bytes[0] != 'B' || bytes[1] != 'M') {
    throw DataError(path.string() + " is not a BMP file");
  }
  const std::uint32_t data_offset = u32(10);
  const std::uint32_t header_size = u32(14);
  const auto w = static_cast<std::int32_t>(u32(18));
  const auto raw_h = static_cast<std::int32_t>(u32(22));
  const std::uint32_t bpp = u16(28);
  const std::uint32_t compression = u32(30);
  if (w <= 0 || raw_h == 0 || (compression != 0 && compression != 3) ||
      (bpp != 8 && bpp != 24 && bpp != 32)) {
    throw DataError("unsupported BMP variant in " + path.string());
  }
  const bool bottom_up = raw_h > 0;
  const int h = bottom_up ? raw_h : -raw_h;
  const std::size_t stride = ((static_cast<std::size_t>(w) * bpp + 31) / 32) * 4;
  const std::size_t palette = 14 + header_size;
  bool gray = bpp == 8;
  if (bpp == 8) {
    for (int i = 0; i < 256 && palette + 4 * i + 2 < data_offset; ++i) {
      const std::size_t o = palette + 4 * static_cast<std::size_t>(i);
      if (bytes[o] != bytes[o + 1] || bytes[o] != bytes[o + 2]) gray = false;
    }
  }
  Image image;
  const int channels = gray ? 1 : 3;
  for (int c = 0; c < channels; ++c) {
    image.planes.emplace_back(h, w, 0.0,
                              gray ? PlaneRole::Gray : static_cast<PlaneRole>(static_cast<int>(PlaneRole::Red) + c));
  }
  for (int y = 0; y < h; ++y) {
    const std::size_t row = data_offset + stride * static_cast<std::size_t>(bottom_up ? h - 1 - y : y);
    for (int x = 0; x < w; ++x) {
      unsigned char rgb[3];
      if (bpp == 8) {
        const std::size_t o = palette + 4 * static_cast<std::size_t>(bytes.at(row + x));
        rgb[0] = bytes.at(o + 2);
        rgb[1] = bytes.at(o + 1);
        rgb[2] = bytes.at(o);
      } else {
        const std::size_t o = row + static_cast<std::size_t>(x) * (bpp / 8);
        rgb[0] = bytes.at(o + 2);
        rgb[1] = bytes.at(o + 1);
        rgb[2] = bytes.at(o);
      }
      for (int c = 0; c < channels; ++c) image.planes[c].at(y, x) = rgb[c] / 255.0;
    }
  }
  return image;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw DataError("no such file: " + path.string());
  if (has_extension(path, {".pgm", ".ppm", ".pnm"})) return read_pnm(path);
  if (has_extension(path, {".bmp"})) return read_bmp(path);
  return read_png(path);
}

void write_png(const std::filesystem::path& path, const Image& image) {
  if (image.planes.size() != 1 && image.planes.size() != 3) {
    throw DimensionError("write_png: expected 1 or 3 planes");
  }
  const int channels = static_cast<int>(image.planes.size());
  const int h = image.height();
  const int w = image.width();
  std::vector<png_byte> buffer(static_cast<std::size_t>(h) * w * channels);
  for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) {
    for (int c = 0; c < channels; ++c) buffer[i * channels + c] = to_byte(image.planes[c].values[i]);
  }
  png_image png;
  std::memset(&png, 0, sizeof png);
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(w);
  png.height = static_cast<png_uint_32>(h);
  png.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
    throw DataError("cannot write PNG " + path.string() + ": " + png.message);
  }
}

void write_pgm(const std::filesystem::path& path, const ImagePlane& plane) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << plane.width << " " << plane.height << "\n255\n";
  for (double v : plane.values) out.put(static_cast<char>(to_byte(v)));
}

// --- color --------------------------------------------------------------------

YCbCr rgb_to_ycbcr(const Image& rgb) {
  if (!rgb.is_color()) throw DimensionError("rgb_to_ycbcr: expected 3 planes");
  const int h = rgb.height();
  const int w = rgb.width();
  YCbCr out{ImagePlane(h, w, 0.0, PlaneRole::Luma), ImagePlane(h, w, 0.0, PlaneRole::Cb),
            ImagePlane(h, w, 0.0, PlaneRole::Cr)};
  for (std::size_t i = 0; i < out.y.size(); ++i) {
    const double r = rgb.planes[0].values[i];
    const double g = rgb.planes[1].values[i];
    const double b = rgb.planes[2].values[i];
    out.y.values[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    out.cb.values[i] = 0.5 - 0.168735891647856 * r - 0.331264108352144 * g + 0.5 * b;
    out.cr.values[i] = 0.5 + 0.5 * r - 0.418687589158345 * g - 0.081312410841655 * b;
  }
  out.y.clamp();
  out.cb.clamp();
  out.cr.clamp();
  return out;
}

Image ycbcr_to_rgb(const YCbCr& p) {
  const int h = p.y.height;
  const int w = p.y.width;
  Image rgb;
  rgb.planes = {ImagePlane(h, w, 0.0, PlaneRole::Red), ImagePlane(h, w, 0.0, PlaneRole::Green),
                ImagePlane(h, w, 0.0, PlaneRole::Blue)};
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    const double y = p.y.values[i];
    const double cb = p.cb.values[i] - 0.5;
    const double cr = p.cr.values[i] - 0.5;
    rgb.planes[0].values[i] = y + 1.402 * cr;
    rgb.planes[1].values[i] = y - 0.344136286201022 * cb - 0.714136286201022 * cr;
    rgb.planes[2].values[i] = y + 1.772 * cb;
  }
  for (auto& plane : rgb.planes) plane.clamp();
  return rgb;
}

ImagePlane luma(const Image& image) {
  if (image.planes.empty()) throw DimensionError("luma: empty image");
  if (!image.is_color()) {
    ImagePlane y = image.planes[0];
    y.role = PlaneRole::Luma;
    return y;
  }
  return rgb_to_ycbcr(image).y;
}

ImagePlane luma_studio(const Image& image) {
  if (!image.is_color()) {
    ImagePlane y = image.planes[0];
    for (double& v : y.values) v = (16.0 + 219.0 * v) / 255.0;
    y.role = PlaneRole::Luma;
    return y;
  }
  ImagePlane y(image.height(), image.width(), 0.0, PlaneRole::Luma);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y.values[i] = (16.0 + 65.481 * image.planes[0].values[i] + 128.553 * image.planes[1].values[i] +
                   24.966 * image.planes[2].values[i]) /
                  255.0;
  }
  return y;
}

// --- resampling -------------------------------------------------------------------

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((a + 2.0) * ax - (a + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((a * ax - 5.0 * a) * ax + 8.0 * a) * ax - 4.0 * a;
  return 0.0;
}

namespace {

struct AxisWeights {
  std::vector<int> first;            // first source index per output sample
  std::vector<std::vector<int>> idx; // clamped source indices
  std::vector<std::vector<double>> w;
};

AxisWeights axis_weights(int in, int out) {
  const double scale = static_cast<double>(out) / in;
  const double widen = scale < 1.0 ? scale : 1.0;
  const double support = 2.0 / widen;
  AxisWeights aw;
  aw.idx.resize(static_cast<std::size_t>(out));
  aw.w.resize(static_cast<std::size_t>(out));
  for (int i = 0; i < out; ++i) {
    const double u = (i + 0.5) / scale - 0.5;
    const int lo = static_cast<int>(std::floor(u - support));
    const int hi = static_cast<int>(std::ceil(u + support));
    double total = 0.0;
    for (int j = lo; j <= hi; ++j) {
      const double wt = widen * cubic_kernel(widen * (u - j));
      if (wt == 0.0) continue;
      aw.idx[i].push_back(std::clamp(j, 0, in - 1));
      aw.w[i].push_back(wt);
      total += wt;
    }
    for (double& wt : aw.w[i]) wt /= total;
  }
  return aw;
}

}  // namespace

ImagePlane resize(const ImagePlane& plane, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw ParameterError("resize: output size " + std::to_string(out_h) + "x" +
                         std::to_string(out_w) + " is empty");
  }
  if (plane.height < 1 || plane.width < 1) throw DimensionError("resize: empty input");
  const AxisWeights rows = axis_weights(plane.height, out_h);
  const AxisWeights cols = axis_weights(plane.width, out_w);

  ImagePlane tmp(plane.height, out_w, 0.0, plane.role);
  for (int y = 0; y < plane.height; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < cols.idx[x].size(); ++k) acc += cols.w[x][k] * plane.at(y, cols.idx[x][k]);
      tmp.at(y, x) = acc;
    }
  }
  ImagePlane out(out_h, out_w, 0.0, plane.role);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < rows.idx[y].size(); ++k) acc += rows.w[y][k] * tmp.at(rows.idx[y][k], x);
      out.at(y, x) = acc;
    }
  }
  out.clamp();
  return out;
}

ImagePlane bicubic_resize(const ImagePlane& plane, double scale) {
  if (!(scale > 0.0)) throw ParameterError("bicubic_resize: scale must be positive");
  const int h = static_cast<int>(std::ceil(plane.height * scale - 1e-9));
  const int w = static_cast<int>(std::ceil(plane.width * scale - 1e-9));
  return resize(plane, h, w);
}

ImagePlane degrade(const ImagePlane& hr, int s) {
  if (s < 1) throw ParameterError("degrade: scale factor must be >= 1");
  if (hr.height % s != 0 || hr.width % s != 0) {
    throw DimensionError("degrade: image " + std::to_string(hr.height) + "x" +
                         std::to_string(hr.width) + " is not divisible by scale " +
                         std::to_string(s) + "; crop first");
  }
  const ImagePlane low = resize(hr, hr.height / s, hr.width / s);
  return resize(low, hr.height, hr.width);
}

ImagePlane crop(const ImagePlane& plane, int top, int left, int h, int w) {
  if (top < 0 || left < 0 || h < 0 || w < 0 || top + h > plane.height || left + w > plane.width) {
    throw DimensionError("crop: window outside image");
  }
  ImagePlane out(h, w, 0.0, plane.role);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(y, x) = plane.at(top + y, left + x);
  }
  return out;
}

ImagePlane crop_to_multiple(const ImagePlane& plane, int m) {
  if (m < 1) throw ParameterError("crop_to_multiple: multiple must be positive");
  if (plane.height < m || plane.width < m) {
    throw DimensionError("crop_to_multiple: image " + std::to_string(plane.height) + "x" +
                         std::to_string(plane.width) + " smaller than " + std::to_string(m));
  }
  const int h = plane.height / m * m;
  const int w = plane.width / m * m;
  return crop(plane, (plane.height - h) / 2, (plane.width - w) / 2, h, w);
}

ImagePlane pad_to_multiple(const ImagePlane& plane, int m) {
  const int h = (plane.height + m - 1) / m * m;
  const int w = (plane.width + m - 1) / m * m;
  ImagePlane out(h, w, 0.0, plane.role);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(y, x) = plane.at(std::min(y, plane.height - 1), std::min(x, plane.width - 1));
    }
  }
  return out;
}

// --- augmentation and patches -------------------------------------------------------

ImagePlane rotate90(const ImagePlane& plane, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  if (q == 0) return plane;
  const bool swap = q % 2 == 1;
  ImagePlane out(swap ? plane.width : plane.height, swap ? plane.height : plane.width, 0.0, plane.role);
  const int H = plane.height;
  const int W = plane.width;
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double v = plane.at(y, x);
      switch (q) {
        case 1: out.at(W - 1 - x, y) = v; break;
        case 2: out.at(H - 1 - y, W - 1 - x) = v; break;
        default: out.at(x, H - 1 - y) = v; break;
      }
    }
  }
  return out;
}

std::vector<Variant> augment(const ImagePlane& image, bool enabled) {
  std::vector<Variant> out;
  const std::vector<int> rotations = enabled ? kRotations : std::vector<int>{0};
  const std::vector<double> scales = enabled ? kScales : std::vector<double>{1.0};
  for (int rot : rotations) {
    const ImagePlane rotated = rotate90(image, rot / 90);
    for (double s : scales) {
      std::ostringstream tag;
      tag << "r" << rot << "_s" << s;
      out.push_back({s == 1.0 ? rotated : bicubic_resize(rotated, s), rot, s, tag.str()});
    }
  }
  return out;
}

std::vector<int> patch_offsets(int extent, int size, int overlap) {
  std::vector<int> offsets;
  if (extent < size) return offsets;
  const int stride = size - overlap;
  if (stride < 1) throw ParameterError("patch overlap must be smaller than patch size");
  for (int p = 0; p + size <= extent; p += stride) offsets.push_back(p);
  if (offsets.back() + size < extent) offsets.push_back(extent - size);
  return offsets;
}

std::vector<PatchPair> extract_patches(const ImagePlane& lr, const ImagePlane& hr, int size,
                                       int overlap) {
  if (lr.height != hr.height || lr.width != hr.width) {
    throw DimensionError("extract_patches: LR and HR sizes differ");
  }
  std::vector<PatchPair> out;
  for (int y : patch_offsets(hr.height, size, overlap)) {
    for (int x : patch_offsets(hr.width, size, overlap)) {
      PatchPair pair{crop(lr, y, x, size, size), crop(hr, y, x, size, size), {}};
      pair.lr.role = PlaneRole::Luma;
      pair.hr.role = PlaneRole::Luma;
      pair.provenance.y = static_cast<std::uint32_t>(y);
      pair.provenance.x = static_cast<std::uint32_t>(x);
      out.push_back(std::move(pair));
    }
  }
  return out;
}

std::uint64_t patch_hash(const PatchPair& pair) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const std::vector<double>& values) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(values.data());
    for (std::size_t i = 0; i < values.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  feed(pair.lr.values);
  feed(pair.hr.values);
  return h;
}

}  // namespace ordsr::dataio

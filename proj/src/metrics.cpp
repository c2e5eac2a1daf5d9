#include "ordsr/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "ordsr/errors.hpp"

namespace ordsr::metrics {
namespace {

dataio::ImagePlane shaved(const dataio::ImagePlane& p, int shave) {
  if (shave == 0) return p;
  if (shave < 0 || 2 * shave >= p.height || 2 * shave >= p.width) {
    throw DimensionError("shave of " + std::to_string(shave) + " leaves no pixels");
  }
  return dataio::crop(p, shave, shave, p.height - 2 * shave, p.width - 2 * shave);
}

void check_same(const dataio::ImagePlane& a, const dataio::ImagePlane& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError(std::string(what) + ": image sizes differ (" + std::to_string(a.height) +
                         "x" + std::to_string(a.width) + " vs " + std::to_string(b.height) + "x" +
                         std::to_string(b.width) + ")");
  }
}

constexpr int kWindow = 11;

std::vector<double> gaussian_window() {
  constexpr double sigma = 1.5;
  std::vector<double> g(kWindow);
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable "valid" filtering with the 1-D window g.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& g) {
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * src[static_cast<std::size_t>(y) * w + x + k];
      tmp[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += g[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  }
  return out;
}

}  // namespace

double psnr(const dataio::ImagePlane& a, const dataio::ImagePlane& b, double peak, int shave) {
  check_same(a, b, "psnr");
  const auto sa = shaved(a, shave);
  const auto sb = shaved(b, shave);
  double mse = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = (sa.values[i] - sb.values[i]) * peak;
    mse += d * d;
  }
  mse /= static_cast<double>(sa.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const dataio::ImagePlane& a, const dataio::ImagePlane& b, int shave) {
  check_same(a, b, "ssim");
  const auto sa = shaved(a, shave);
  const auto sb = shaved(b, shave);
  const int h = sa.height;
  const int w = sa.width;
  if (h < kWindow || w < kWindow) {
    throw DimensionError("ssim: image must be at least 11x11 after shaving");
  }
  constexpr double range = 255.0;
  constexpr double c1 = (0.01 * range) * (0.01 * range);
  constexpr double c2 = (0.03 * range) * (0.03 * range);

  const std::size_t n = sa.size();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = sa.values[i] * range;
    y[i] = sb.values[i] * range;
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto g = gaussian_window();
  const auto mx = filter_valid(x, h, w, g);
  const auto my = filter_valid(y, h, w, g);
  const auto sxx = filter_valid(xx, h, w, g);
  const auto syy = filter_valid(yy, h, w, g);
  const auto sxy = filter_valid(xy, h, w, g);

  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

}  // namespace ordsr::metrics

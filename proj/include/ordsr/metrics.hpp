#pragma once

#include <string>

#include "ordsr/dataio.hpp"

namespace ordsr::metrics {

/// Cap written to reports when two images are identical and PSNR is infinite.
inline constexpr double kPsnrCap = 100.0;

struct QualityReport {
  std::string image;
  int scale = 0;
  int border_shave = 0;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

/// 10 log10(peak^2 / MSE) on values scaled by `peak`, after removing `shave` pixels per side.
/// Returns +inf for identical inputs.
double psnr(const dataio::ImagePlane& a, const dataio::ImagePlane& b, double peak = 255.0,
            int shave = 0);

/// Mean SSIM over all full 11x11 Gaussian (sigma 1.5) windows; K1 = 0.01, K2 = 0.03,
/// dynamic range 255. Requires at least 11x11 pixels after shaving.
double ssim(const dataio::ImagePlane& a, const dataio::ImagePlane& b, int shave = 0);

/// Finite value for CSV output.
inline double capped(double psnr_db) { return psnr_db > kPsnrCap ? kPsnrCap : psnr_db; }

}  // namespace ordsr::metrics

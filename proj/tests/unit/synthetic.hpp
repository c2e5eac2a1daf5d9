#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ordsr/dataio.hpp"

namespace synthetic {

/// Smooth random texture: a sum of a few random 2-D sinusoids plus an edge, values in [0, 1].
inline ordsr::dataio::ImagePlane texture(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ordsr::dataio::ImagePlane p(h, w, 0.0, ordsr::dataio::PlaneRole::Luma);
  double fx[4], fy[4], ph[4], amp[4];
  for (int k = 0; k < 4; ++k) {
    fx[k] = 0.05 + 0.6 * u(rng);
    fy[k] = 0.05 + 0.6 * u(rng);
    ph[k] = 6.28 * u(rng);
    amp[k] = 0.1 * u(rng);
  }
  const double edge = 0.3 * w + 0.4 * w * u(rng);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double v = 0.5 + (x + 0.3 * y > edge ? 0.15 : -0.15);
      for (int k = 0; k < 4; ++k) v += amp[k] * std::sin(fx[k] * x + fy[k] * y + ph[k]);
      p.at(y, x) = std::clamp(v, 0.0, 1.0);
    }
  return p;
}

/// n LR/HR patch pairs of size 40 from synthetic textures degraded by `scale`.
inline std::vector<ordsr::dataio::PatchPair> patches(int n, int scale, std::uint64_t seed) {
  std::vector<ordsr::dataio::PatchPair> out;
  std::uint64_t s = seed;
  while (static_cast<int>(out.size()) < n) {
    const auto hr = texture(80, 80, s++);
    const auto lr = ordsr::dataio::degrade(hr, scale);
    for (auto& p : ordsr::dataio::extract_patches(lr, hr, 40, 10)) {
      if (static_cast<int>(out.size()) < n) out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace synthetic

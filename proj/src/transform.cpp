#include "ordsr/transform.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ordsr/errors.hpp"
#include "ordsr/numerics.hpp"

namespace ordsr::transform {

std::vector<FrequencyIndex> zigzag_indices(int n) {
  std::vector<FrequencyIndex> order;
  if (n < 1) return order;
  order.reserve(static_cast<std::size_t>(n * n));
  for (int s = 0; s <= 2 * (n - 1); ++s) {
    const int lo = std::max(0, s - (n - 1));
    const int hi = std::min(s, n - 1);
    if (s % 2 == 1) {
      for (int k1 = lo; k1 <= hi; ++k1) order.push_back({k1, s - k1});
    } else {
      for (int k1 = hi; k1 >= lo; --k1) order.push_back({k1, s - k1});
    }
  }
  return order;
}

CDCTBank make_dct_bank(int n) {
  if (n < 2) throw ParameterError("make_dct_bank: block size must be >= 2, got " + std::to_string(n));
  const auto order = zigzag_indices(n);
  const auto un = static_cast<std::size_t>(n);
  CDCTBank bank{n, Tensor(Shape{un * un, 1, un, un})};
  auto alpha = [n](int k) { return std::sqrt((k == 0 ? 1.0 : 2.0) / n); };
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto [k1, k2] = order[i];
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        bank.filters.at(i, 0, static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
            alpha(k1) * alpha(k2) * std::cos(std::numbers::pi / n * (r + 0.5) * k1) *
            std::cos(std::numbers::pi / n * (c + 0.5) * k2);
      }
    }
  }
  return bank;
}

Tensor analyze(const Tensor& image, const CDCTBank& bank) {
  const Shape& s = image.shape();
  if (s.c != 1) throw DimensionError("analyze: expected 1 channel, got " + std::to_string(s.c));
  const auto n = static_cast<std::size_t>(bank.n);
  if (s.h % n != 0 || s.w % n != 0) {
    throw DimensionError("analyze: image " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                         " is not a multiple of " + std::to_string(n) +
                         "; pad or crop before analysis");
  }
  return numerics::conv2d(image, bank.filters, bank.n, 0);
}

Tensor synthesize(const Tensor& cube, const CDCTBank& bank) {
  if (cube.shape().c != static_cast<std::size_t>(bank.count())) {
    throw DimensionError("synthesize: cube has " + std::to_string(cube.shape().c) +
                         " channels, bank has " + std::to_string(bank.count()) + " filters");
  }
  return numerics::transposed_conv2d(cube, bank.filters, bank.n);
}

SplitCube split(const Tensor& cube, int t) {
  const Shape& s = cube.shape();
  if (t < 1 || static_cast<std::size_t>(t) >= s.c) {
    throw ParameterError("split: threshold " + std::to_string(t) + " outside [1, " +
                         std::to_string(s.c - 1) + "]");
  }
  const auto ut = static_cast<std::size_t>(t);
  SplitCube parts{Tensor(Shape{s.n, ut, s.h, s.w}), Tensor(Shape{s.n, s.c - ut, s.h, s.w})};
  const std::size_t plane = s.h * s.w;
  for (std::size_t b = 0; b < s.n; ++b) {
    const double* src = cube.raw() + cube.offset(b, 0, 0, 0);
    std::copy(src, src + ut * plane, parts.low.raw() + parts.low.offset(b, 0, 0, 0));
    std::copy(src + ut * plane, src + s.c * plane, parts.high.raw() + parts.high.offset(b, 0, 0, 0));
  }
  return parts;
}

Tensor merge(const Tensor& low, const Tensor& high) {
  const Shape& l = low.shape();
  const Shape& h = high.shape();
  if (l.n != h.n || l.h != h.h || l.w != h.w) {
    throw DimensionError("merge: low " + l.str() + " and high " + h.str() + " disagree");
  }
  Tensor cube(Shape{l.n, l.c + h.c, l.h, l.w});
  const std::size_t plane = l.h * l.w;
  for (std::size_t b = 0; b < l.n; ++b) {
    double* dst = cube.raw() + cube.offset(b, 0, 0, 0);
    const double* lo = low.raw() + low.offset(b, 0, 0, 0);
    const double* hi = high.raw() + high.offset(b, 0, 0, 0);
    std::copy(lo, lo + l.c * plane, dst);
    std::copy(hi, hi + h.c * plane, dst + l.c * plane);
  }
  return cube;
}

Tensor gram_matrix(const CDCTBank& bank) {
  const std::size_t k = bank.filters.shape().n;
  const std::size_t len = bank.filters.size() / k;
  Tensor gram(Shape{1, 1, k, k});
  const double* w = bank.filters.raw();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < len; ++p) acc += w[i * len + p] * w[j * len + p];
      gram.at(0, 0, i, j) = acc;
      gram.at(0, 0, j, i) = acc;
    }
  }
  return gram;
}

OrthoPenalty ortho_penalty(const CDCTBank& bank, double epsilon) {
  const std::size_t k = bank.filters.shape().n;
  const std::size_t len = bank.filters.size() / k;
  const Tensor gram = gram_matrix(bank);
  OrthoPenalty out{0.0, Tensor::zeros_like(bank.filters)};
  const double* w = bank.filters.raw();
  double* g = out.grad.raw();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double residual = gram.at(0, 0, i, j) - epsilon;
      if (j > i) out.value += residual * residual;
      const double scale = 2.0 * residual;
      for (std::size_t p = 0; p < len; ++p) g[i * len + p] += scale * w[j * len + p];
    }
  }
  return out;
}

std::vector<double> spectrum_profile(const Tensor& image, const CDCTBank& bank) {
  const Tensor cube = analyze(image, bank);
  const Shape& s = cube.shape();
  std::vector<double> profile(s.c, 0.0);
  const std::size_t plane = s.h * s.w;
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* p = cube.raw() + cube.offset(b, c, 0, 0);
      for (std::size_t i = 0; i < plane; ++i) profile[c] += std::abs(p[i]);
    }
  }
  const double count = static_cast<double>(s.n * plane);
  if (count > 0) {
    for (double& v : profile) v /= count;
  }
  return profile;
}

double bank_distance(const CDCTBank& a, const CDCTBank& b) {
  return std::sqrt(sum_squares(a.filters - b.filters));
}

}  // namespace ordsr::transform

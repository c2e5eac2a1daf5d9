#pragma once

#include <utility>
#include <vector>

#include "ordsr/tensor.hpp"

// Convolutional DCT: a bank of N*N filters applied with stride N so that the
// output channels are the block-DCT coefficients of the image, one channel per
// frequency in zig-zag order.
namespace ordsr::transform {

struct FrequencyIndex {
  int k1;  // vertical frequency (row)
  int k2;  // horizontal frequency (column)
  bool operator==(const FrequencyIndex&) const = default;
};

/// JPEG zig-zag order over {0..n-1}^2: (0,0), (0,1), (1,0), (2,0), (1,1), (0,2), ...
std::vector<FrequencyIndex> zigzag_indices(int n);

/// Trainable CDCT filter bank. `filters` is (n*n, 1, n, n); channel 0 is the DC filter.
/// The same tensor serves as conv2d filters for analysis and transposed_conv2d filters for
/// synthesis.
struct CDCTBank {
  int n = 8;
  Tensor filters;

  int count() const { return n * n; }
};

/// Orthonormal DCT-II basis, alpha(0) = sqrt(1/n), alpha(k) = sqrt(2/n), in zig-zag order.
CDCTBank make_dct_bank(int n = 8);

/// image (B, 1, H, W) with H, W divisible by n -> cube (B, n*n, H/n, W/n).
Tensor analyze(const Tensor& image, const CDCTBank& bank);

/// cube (B, n*n, h, w) -> image (B, 1, h*n, w*n). Exact adjoint of analyze.
Tensor synthesize(const Tensor& cube, const CDCTBank& bank);

struct SplitCube {
  Tensor low;   // channels [0, t)
  Tensor high;  // channels [t, C)
};

/// Partition cube channels at threshold t, 1 <= t <= C-1.
SplitCube split(const Tensor& cube, int t);
/// Concatenate along channels; inverse of split.
Tensor merge(const Tensor& low, const Tensor& high);

/// Gram matrix of vectorized filters, shaped (1, 1, K, K).
Tensor gram_matrix(const CDCTBank& bank);

struct OrthoPenalty {
  double value = 0.0;
  Tensor grad;  // same shape as bank.filters
};

/// Sum over i<j of (<w_i, w_j> - epsilon)^2 and its gradient; self terms are excluded.
OrthoPenalty ortho_penalty(const CDCTBank& bank, double epsilon);

/// Mean |f_i| over all positions of analyze(image), one value per filter.
std::vector<double> spectrum_profile(const Tensor& image, const CDCTBank& bank);

/// Frobenius distance between two banks of the same size.
double bank_distance(const CDCTBank& a, const CDCTBank& b);

}  // namespace ordsr::transform

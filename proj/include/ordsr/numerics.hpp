#pragma once

#include "ordsr/tensor.hpp"

// Forward and backward kernels for the fixed network topology.
//
// "Convolution" is cross-correlation throughout: the kernel is not flipped.
// All kernels are pure and single-threaded, so results do not depend on the
// caller's thread count.
namespace ordsr::numerics {

struct ConvGrads {
  Tensor input;
  Tensor filters;
};

/// input (N, C, H, W), filters (O, C, kH, kW) -> (N, O, (H+2p-kH)/s+1, (W+2p-kW)/s+1).
Tensor conv2d(const Tensor& input, const Tensor& filters, int stride, int pad);

/// Gradients of sum(upstream * conv2d(input, filters, stride, pad)).
ConvGrads conv2d_backward(const Tensor& input, const Tensor& filters, int stride, int pad,
                          const Tensor& upstream);

/// Adjoint of conv2d with zero padding. input (N, C, h, w), filters (C, O, kH, kW)
/// -> (N, O, (h-1)*s+kH, (w-1)*s+kW).
Tensor transposed_conv2d(const Tensor& input, const Tensor& filters, int stride);

/// Gradients of sum(upstream * transposed_conv2d(input, filters, stride)).
ConvGrads transposed_conv2d_backward(const Tensor& input, const Tensor& filters, int stride,
                                     const Tensor& upstream);

Tensor relu(const Tensor& input);
/// Passes upstream where input > 0; zero at input == 0.
Tensor relu_backward(const Tensor& input, const Tensor& upstream);

/// Adds bias (1, C, 1, 1) to every spatial position of x (N, C, H, W).
void add_channel_bias(Tensor& x, const Tensor& bias);
/// Sum of upstream over batch and space, shaped (1, C, 1, 1).
Tensor channel_bias_backward(const Tensor& upstream);

}  // namespace ordsr::numerics

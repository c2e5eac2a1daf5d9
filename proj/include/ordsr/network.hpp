#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ordsr/tensor.hpp"
#include "ordsr/transform.hpp"

namespace ordsr::network {

/// Layer-shape hyperparameters. `depth` is the total number of CNN conv layers.
struct Architecture {
  int block = 8;
  int depth = 14;
  int threshold = 4;
  int hidden = 64;

  int high_channels() const { return block * block - threshold; }
  bool operator==(const Architecture&) const = default;
};

void validate(const Architecture& arch);

struct ConvLayer {
  Tensor weights;  // (out, in, 3, 3)
  Tensor bias;     // (1, out, 1, 1)
};

/// All trainable tensors: the CDCT bank and the CNN layers. Also used to hold gradients and
/// optimizer moments with identical layout.
struct NetworkParams {
  transform::CDCTBank bank;
  std::vector<ConvLayer> layers;

  int threshold() const;
  Architecture architecture() const;
};

enum class ParamKind { Bank, Weight, Bias };

struct ParamSlot {
  std::string name;
  ParamKind kind;
  Tensor* tensor;
};

struct ConstParamSlot {
  std::string name;
  ParamKind kind;
  const Tensor* tensor;
};

/// Stable enumeration: bank first, then layer weights/bias in order.
std::vector<ParamSlot> slots(NetworkParams& params);
std::vector<ConstParamSlot> slots(const NetworkParams& params);

/// Same layout, all zeros.
NetworkParams zeros_like(const NetworkParams& params);

/// DCT bank plus He-normal CNN weights (std sqrt(2/fan_in)) and zero biases.
NetworkParams init_params(const Architecture& arch, std::uint64_t seed);

/// Sets every CNN weight and bias to zero, making the network an identity map.
void zero_cnn(NetworkParams& params);

std::size_t parameter_count(const NetworkParams& params);
std::size_t parameter_count(const Architecture& arch);

struct CnnTrace {
  std::vector<Tensor> inputs;  // inputs[l] feeds layer l; inputs[0] is f_high
  std::vector<Tensor> pre_activations;
};

struct ForwardTrace {
  Tensor x;
  Tensor cube;
  Tensor f_low;
  Tensor f_high;
  CnnTrace cnn;
  Tensor residual;
  Tensor f_high_hat;
  Tensor cube_hat;
  Tensor y_hat;
};

/// D convolutions (3x3, pad 1), ReLU after all but the last.
Tensor cnn_residual(const Tensor& f_high, const std::vector<ConvLayer>& layers,
                    CnnTrace* trace = nullptr);

struct CnnGrads {
  Tensor input;
  std::vector<ConvLayer> layers;
};

CnnGrads cnn_backward(const CnnTrace& trace, const std::vector<ConvLayer>& layers,
                      const Tensor& grad_output);

/// x (B, 1, H, W), values in [0, 1], H and W multiples of the block size.
/// analyze -> split(t) -> f_high + cnn(f_high) -> merge -> synthesize.
ForwardTrace forward(const Tensor& x, const NetworkParams& params, int t);

/// Convenience: only the SR output.
Tensor infer(const Tensor& x, const NetworkParams& params);

/// Gradients of sum(grad_y_hat * y_hat) for every parameter. The bank gradient accumulates
/// the synthesis and the analysis contributions.
NetworkParams backward(const ForwardTrace& trace, const NetworkParams& params,
                       const Tensor& grad_y_hat);

}  // namespace ordsr::network

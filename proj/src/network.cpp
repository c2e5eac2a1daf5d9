#include "ordsr/network.hpp"

#include <cmath>
#include <random>

#include "ordsr/errors.hpp"
#include "ordsr/numerics.hpp"

namespace ordsr::network {

void validate(const Architecture& arch) {
  if (arch.block < 2) throw ParameterError("block size must be >= 2");
  if (arch.depth < 1) throw ParameterError("CNN depth must be >= 1");
  if (arch.hidden < 1) throw ParameterError("hidden width must be >= 1");
  if (arch.threshold < 1 || arch.threshold >= arch.block * arch.block) {
    throw ParameterError("threshold " + std::to_string(arch.threshold) + " outside [1, " +
                         std::to_string(arch.block * arch.block - 1) + "]");
  }
}

int NetworkParams::threshold() const {
  if (layers.empty()) throw ConsistencyError("network has no CNN layers");
  return bank.count() - static_cast<int>(layers.front().weights.shape().c);
}

Architecture NetworkParams::architecture() const {
  Architecture arch;
  arch.block = bank.n;
  arch.depth = static_cast<int>(layers.size());
  arch.threshold = threshold();
  arch.hidden = layers.size() > 1 ? static_cast<int>(layers.front().weights.shape().n) : 64;
  return arch;
}

std::vector<ParamSlot> slots(NetworkParams& params) {
  std::vector<ParamSlot> out;
  out.push_back({"bank", ParamKind::Bank, &params.bank.filters});
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    out.push_back({"conv" + std::to_string(l + 1) + ".weight", ParamKind::Weight,
                   &params.layers[l].weights});
    out.push_back({"conv" + std::to_string(l + 1) + ".bias", ParamKind::Bias,
                   &params.layers[l].bias});
  }
  return out;
}

std::vector<ConstParamSlot> slots(const NetworkParams& params) {
  std::vector<ConstParamSlot> out;
  for (const auto& s : slots(const_cast<NetworkParams&>(params))) {
    out.push_back({s.name, s.kind, s.tensor});
  }
  return out;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z;
  z.bank = transform::CDCTBank{params.bank.n, Tensor::zeros_like(params.bank.filters)};
  for (const auto& layer : params.layers) {
    z.layers.push_back({Tensor::zeros_like(layer.weights), Tensor::zeros_like(layer.bias)});
  }
  return z;
}

NetworkParams init_params(const Architecture& arch, std::uint64_t seed) {
  validate(arch);
  NetworkParams params;
  params.bank = transform::make_dct_bank(arch.block);
  std::mt19937_64 rng(seed);
  const auto high = static_cast<std::size_t>(arch.high_channels());
  const auto hidden = static_cast<std::size_t>(arch.hidden);
  for (int l = 0; l < arch.depth; ++l) {
    const std::size_t in = l == 0 ? high : hidden;
    const std::size_t out = l == arch.depth - 1 ? high : hidden;
    ConvLayer layer{Tensor(Shape{out, in, 3, 3}), Tensor(Shape{1, out, 1, 1})};
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(in * 9)));
    for (double& v : layer.weights.data()) v = dist(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

void zero_cnn(NetworkParams& params) {
  for (auto& layer : params.layers) {
    layer.weights.fill(0.0);
    layer.bias.fill(0.0);
  }
}

std::size_t parameter_count(const NetworkParams& params) {
  std::size_t total = 0;
  for (const auto& s : slots(params)) total += s.tensor->size();
  return total;
}

std::size_t parameter_count(const Architecture& arch) {
  validate(arch);
  const auto high = static_cast<std::size_t>(arch.high_channels());
  const auto hidden = static_cast<std::size_t>(arch.hidden);
  const auto block = static_cast<std::size_t>(arch.block);
  std::size_t total = block * block * block * block;
  for (int l = 0; l < arch.depth; ++l) {
    const std::size_t in = l == 0 ? high : hidden;
    const std::size_t out = l == arch.depth - 1 ? high : hidden;
    total += out * in * 9 + out;
  }
  return total;
}

Tensor cnn_residual(const Tensor& f_high, const std::vector<ConvLayer>& layers, CnnTrace* trace) {
  if (layers.empty()) throw DimensionError("cnn_residual: no layers");
  if (f_high.shape().c != layers.front().weights.shape().c) {
    throw DimensionError("cnn_residual: input has " + std::to_string(f_high.shape().c) +
                         " channels, first layer expects " +
                         std::to_string(layers.front().weights.shape().c));
  }
  if (trace != nullptr) *trace = CnnTrace{};
  Tensor activation = f_high;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Tensor z = numerics::conv2d(activation, layers[l].weights, 1, 1);
    numerics::add_channel_bias(z, layers[l].bias);
    const bool last = l + 1 == layers.size();
    Tensor next = last ? z : numerics::relu(z);
    if (trace != nullptr) {
      trace->inputs.push_back(std::move(activation));
      trace->pre_activations.push_back(std::move(z));
    }
    activation = std::move(next);
  }
  return activation;
}

CnnGrads cnn_backward(const CnnTrace& trace, const std::vector<ConvLayer>& layers,
                      const Tensor& grad_output) {
  if (trace.inputs.size() != layers.size() || trace.pre_activations.size() != layers.size()) {
    throw ConsistencyError("cnn_backward: trace depth does not match layer count");
  }
  CnnGrads grads;
  grads.layers.resize(layers.size());
  Tensor grad = grad_output;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Tensor& z = trace.pre_activations[l];
    if (!(z.shape() == grad.shape())) {
      throw ConsistencyError("cnn_backward: stale trace at layer " + std::to_string(l + 1) +
                             ": " + z.shape().str() + " vs " + grad.shape().str());
    }
    if (l + 1 != layers.size()) grad = numerics::relu_backward(z, grad);
    grads.layers[l].bias = numerics::channel_bias_backward(grad);
    auto conv = numerics::conv2d_backward(trace.inputs[l], layers[l].weights, 1, 1, grad);
    grads.layers[l].weights = std::move(conv.filters);
    grad = std::move(conv.input);
  }
  grads.input = std::move(grad);
  return grads;
}

ForwardTrace forward(const Tensor& x, const NetworkParams& params, int t) {
  if (t != params.threshold()) {
    throw DimensionError("forward: threshold " + std::to_string(t) +
                         " does not match network input width (threshold " +
                         std::to_string(params.threshold()) + ")");
  }
  ForwardTrace tr;
  tr.x = x;
  tr.cube = transform::analyze(x, params.bank);
  auto parts = transform::split(tr.cube, t);
  tr.f_low = std::move(parts.low);
  tr.f_high = std::move(parts.high);
  tr.residual = cnn_residual(tr.f_high, params.layers, &tr.cnn);
  tr.f_high_hat = tr.f_high + tr.residual;
  tr.cube_hat = transform::merge(tr.f_low, tr.f_high_hat);
  tr.y_hat = transform::synthesize(tr.cube_hat, params.bank);
  return tr;
}

Tensor infer(const Tensor& x, const NetworkParams& params) {
  return forward(x, params, params.threshold()).y_hat;
}

NetworkParams backward(const ForwardTrace& trace, const NetworkParams& params,
                       const Tensor& grad_y_hat) {
  if (!(grad_y_hat.shape() == trace.y_hat.shape())) {
    throw ConsistencyError("backward: gradient shape " + grad_y_hat.shape().str() +
                           " does not match trace output " + trace.y_hat.shape().str());
  }
  if (trace.cube_hat.shape().c != static_cast<std::size_t>(params.bank.count()) ||
      trace.cnn.inputs.size() != params.layers.size() ||
      trace.f_low.shape().c != static_cast<std::size_t>(params.threshold())) {
    throw ConsistencyError("backward: trace was produced by a different network layout");
  }
  NetworkParams grads;
  grads.bank.n = params.bank.n;

  // Synthesis path.
  auto synth = numerics::transposed_conv2d_backward(trace.cube_hat, params.bank.filters,
                                                    params.bank.n, grad_y_hat);
  grads.bank.filters = std::move(synth.filters);

  auto grad_parts = transform::split(synth.input, static_cast<int>(trace.f_low.shape().c));
  CnnGrads cnn = cnn_backward(trace.cnn, params.layers, grad_parts.high);
  grads.layers = std::move(cnn.layers);

  // Skip connection: d f_high_hat / d f_high = I + d cnn / d f_high.
  Tensor grad_high = grad_parts.high + cnn.input;
  Tensor grad_cube = transform::merge(grad_parts.low, grad_high);

  // Analysis path.
  auto analysis =
      numerics::conv2d_backward(trace.x, params.bank.filters, params.bank.n, 0, grad_cube);
  grads.bank.filters += analysis.filters;
  return grads;
}

}  // namespace ordsr::network

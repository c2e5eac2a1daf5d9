#include "ordsr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ordsr/errors.hpp"
#include "ordsr/metrics.hpp"

namespace ordsr::optim {

using network::NetworkParams;
using network::ParamKind;

std::string to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Full: return "full";
    case TrainMode::NoOrtho: return "no-ortho";
    case TrainMode::FrozenBank: return "frozen-bank";
  }
  return "full";
}

TrainMode parse_mode(const std::string& text) {
  if (text == "full") return TrainMode::Full;
  if (text == "no-ortho") return TrainMode::NoOrtho;
  if (text == "frozen-bank") return TrainMode::FrozenBank;
  throw ConfigError("unknown training mode '" + text + "' (expected full, no-ortho, frozen-bank)");
}

void validate(const TrainConfig& cfg) {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(cfg.lr0 > 0.0, "lr0 must be positive");
  require(cfg.decay > 0.0 && cfg.decay < 1.0, "decay must lie in (0, 1)");
  require(cfg.decay_every > 0, "decay_every must be positive");
  require(cfg.clip > 0.0, "clip must be positive");
  require(cfg.sigma >= 0.0, "sigma must be non-negative");
  require(cfg.gamma >= 0.0, "gamma must be non-negative");
  require(cfg.epsilon >= 0.0, "epsilon must be non-negative");
  require(cfg.batch_size > 0, "batch size must be positive");
  require(cfg.epochs >= 0, "epochs must be non-negative");
  require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
          "Adam betas must lie in [0, 1)");
  require(cfg.adam_eps > 0.0, "Adam epsilon must be positive");
  require(cfg.checkpoint_every >= 0, "checkpoint_every must be non-negative");
  try {
    network::validate(cfg.arch);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

AdamState make_adam(const NetworkParams& params, const TrainConfig& cfg) {
  return AdamState{network::zeros_like(params), network::zeros_like(params), 0, cfg.beta1,
                   cfg.beta2, cfg.adam_eps};
}

LossResult total_loss(const Tensor& x, const Tensor& y, const NetworkParams& params,
                      const TrainConfig& cfg) {
  require_same_shape(x, y, "total_loss");
  const auto trace = network::forward(x, params, params.threshold());
  const double batch = static_cast<double>(x.shape().n);

  Tensor diff = trace.y_hat - y;
  LossResult out;
  out.loss.data = 0.5 * sum_squares(diff) / batch;
  diff *= 1.0 / batch;
  out.grads = network::backward(trace, params, diff);

  const bool bank_trainable = cfg.bank_trainable();
  auto param_slots = network::slots(params);
  auto grad_slots = network::slots(out.grads);
  for (std::size_t i = 0; i < param_slots.size(); ++i) {
    const auto& p = param_slots[i];
    if (p.kind == ParamKind::Bias) continue;
    if (p.kind == ParamKind::Bank && !bank_trainable) continue;
    out.loss.l2 += sum_squares(*p.tensor);
    Tensor& g = *grad_slots[i].tensor;
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += 2.0 * cfg.sigma * (*p.tensor)[k];
  }

  const auto ortho = transform::ortho_penalty(params.bank, cfg.epsilon);
  out.loss.ortho = ortho.value;
  const double gamma = cfg.effective_gamma();
  if (gamma != 0.0) out.grads.bank.filters += ortho.grad * gamma;
  if (!bank_trainable) out.grads.bank.filters.fill(0.0);

  out.loss.total = out.loss.data + cfg.sigma * out.loss.l2 + gamma * out.loss.ortho;
  return out;
}

void clip_gradients(NetworkParams& grads, double clip) {
  for (auto& slot : network::slots(grads)) {
    for (double& g : slot.tensor->data()) g = std::clamp(g, -clip, clip);
  }
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw ParameterError("lr_at: epoch must be non-negative");
  return cfg.lr0 * std::pow(1.0 - cfg.decay, epoch / cfg.decay_every);
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state, double lr,
               bool update_bank) {
  state.step += 1;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto p_slots = network::slots(params);
  const auto g_slots = network::slots(grads);
  auto m_slots = network::slots(state.m);
  auto v_slots = network::slots(state.v);
  if (g_slots.size() != p_slots.size() || m_slots.size() != p_slots.size()) {
    throw DimensionError("adam_step: parameter, gradient and moment layouts differ");
  }
  for (std::size_t i = 0; i < p_slots.size(); ++i) {
    if (p_slots[i].kind == ParamKind::Bank && !update_bank) continue;
    Tensor& p = *p_slots[i].tensor;
    const Tensor& g = *g_slots[i].tensor;
    Tensor& m = *m_slots[i].tensor;
    Tensor& v = *v_slots[i].tensor;
    require_same_shape(p, g, "adam_step");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1)));
  // Fisher-Yates with an explicit draw so the order does not depend on the standard library.
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

TrainState initial_state(const TrainConfig& cfg) {
  validate(cfg);
  TrainState state;
  state.params = network::init_params(cfg.arch, cfg.seed);
  state.adam = make_adam(state.params, cfg);
  return state;
}

double validation_psnr(const NetworkParams& params, std::span<const ValidationImage> validation,
                       int shave) {
  if (validation.empty()) return std::nan("");
  double total = 0.0;
  for (const auto& v : validation) {
    auto sr = dataio::ImagePlane::from_tensor(network::infer(v.lr.to_tensor(), params));
    sr.clamp();
    total += metrics::capped(metrics::psnr(sr, v.hr, 255.0, shave));
  }
  return total / static_cast<double>(validation.size());
}

namespace {

Tensor gather(std::span<const dataio::PatchPair> dataset, std::span<const std::size_t> idx,
              bool hr) {
  const auto& first = hr ? dataset[idx[0]].hr : dataset[idx[0]].lr;
  const auto h = static_cast<std::size_t>(first.height);
  const auto w = static_cast<std::size_t>(first.width);
  Tensor batch(Shape{idx.size(), 1, h, w});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& plane = hr ? dataset[idx[b]].hr : dataset[idx[b]].lr;
    if (static_cast<std::size_t>(plane.height) != h || static_cast<std::size_t>(plane.width) != w) {
      throw DimensionError("train: patches in a batch must share one size");
    }
    std::copy(plane.values.begin(), plane.values.end(), batch.raw() + batch.offset(b, 0, 0, 0));
  }
  return batch;
}

}  // namespace

void train(std::span<const dataio::PatchPair> dataset, const TrainConfig& cfg, TrainState& state,
           std::span<const ValidationImage> validation, const TrainHooks& hooks) {
  validate(cfg);
  if (dataset.empty()) throw ConfigError("train: dataset is empty");
  if (!(state.params.architecture() == cfg.arch)) {
    throw ConfigError("train: parameter layout does not match the configured architecture");
  }
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    const auto order = epoch_order(dataset.size(), cfg.seed, epoch);
    EpochLog log;
    log.epoch = epoch + 1;
    log.lr = lr;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
      const std::size_t count = std::min(batch_size, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, count);
      const Tensor x = gather(dataset, idx, false);
      const Tensor y = gather(dataset, idx, true);
      LossResult result = total_loss(x, y, state.params, cfg);
      if (!std::isfinite(result.loss.total)) {
        std::string where;
        for (std::size_t k = 0; k < std::min<std::size_t>(count, 8); ++k) {
          const auto& p = dataset[idx[k]].provenance;
          where += " [src " + std::to_string(p.source) + " " + p.variant + " @" +
                   std::to_string(p.y) + "," + std::to_string(p.x) + "]";
        }
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) +
                             ", batch " + std::to_string(batch_index) + " (data " +
                             std::to_string(result.loss.data) + ", l2 " +
                             std::to_string(result.loss.l2) + ", ortho " +
                             std::to_string(result.loss.ortho) + "); first patches:" + where);
      }
      clip_gradients(result.grads, cfg.clip);
      adam_step(state.params, result.grads, state.adam, lr, cfg.bank_trainable());

      const double weight = static_cast<double>(count);
      log.loss.data += weight * result.loss.data;
      log.loss.l2 += weight * result.loss.l2;
      log.loss.ortho += weight * result.loss.ortho;
      log.loss.total += weight * result.loss.total;
    }
    const double n = static_cast<double>(dataset.size());
    log.loss.data /= n;
    log.loss.l2 /= n;
    log.loss.ortho /= n;
    log.loss.total /= n;
    if (!validation.empty()) log.psnr_val = validation_psnr(state.params, validation, cfg.scale);

    state.epoch = epoch + 1;
    state.history.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
    const bool periodic = cfg.checkpoint_every > 0 && state.epoch % cfg.checkpoint_every == 0;
    if (hooks.on_checkpoint && (periodic || state.epoch == cfg.epochs)) hooks.on_checkpoint(state);
  }
}

}  // namespace ordsr::optim

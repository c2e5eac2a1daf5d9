#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ordsr/dataio.hpp"
#include "ordsr/network.hpp"

namespace ordsr::optim {

enum class TrainMode {
  Full,        // all parameters, orthogonality penalty active
  NoOrtho,     // gamma = 0: penalty reported but not optimized
  FrozenBank,  // CDCT bank excluded from the trainable set
};

std::string to_string(TrainMode mode);
TrainMode parse_mode(const std::string& text);

struct TrainConfig {
  double lr0 = 1e-3;
  double decay = 0.25;   // fractional LR reduction per decay period
  int decay_every = 25;  // epochs
  double clip = 0.01;
  double sigma = 1e-3;    // weight decay
  double gamma = 1.0;     // orthogonality weight
  double epsilon = 1e-3;  // orthogonality target
  network::Architecture arch{};
  int batch_size = 64;
  int epochs = 85;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::Full;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int checkpoint_every = 0;  // 0: final checkpoint only
  int scale = 2;             // degradation factor of the training data (recorded only)

  /// gamma as applied to gradients: zero in NoOrtho mode.
  double effective_gamma() const { return mode == TrainMode::NoOrtho ? 0.0 : gamma; }
  bool bank_trainable() const { return mode != TrainMode::FrozenBank; }
};

/// Throws ConfigError on out-of-range values.
void validate(const TrainConfig& cfg);

struct AdamState {
  network::NetworkParams m;
  network::NetworkParams v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam(const network::NetworkParams& params, const TrainConfig& cfg);

struct LossBreakdown {
  double data = 0.0;   // batch mean of 0.5 * ||y_hat - y||^2
  double l2 = 0.0;     // sum of squared trainable filter weights (biases excluded)
  double ortho = 0.0;  // pairwise orthogonality penalty of the bank
  double total = 0.0;  // data + sigma * l2 + effective_gamma * ortho
};

struct LossResult {
  LossBreakdown loss;
  network::NetworkParams grads;
};

/// x, y (B, 1, H, W). Gradients of `total`; bank gradients are zero when the bank is frozen.
LossResult total_loss(const Tensor& x, const Tensor& y, const network::NetworkParams& params,
                      const TrainConfig& cfg);

/// Elementwise clamp to [-clip, clip].
void clip_gradients(network::NetworkParams& grads, double clip);

/// lr0 * (1 - decay)^floor(epoch / decay_every), epoch counted from 0.
double lr_at(int epoch, const TrainConfig& cfg);

/// Bias-corrected Adam. Skips the bank when `update_bank` is false.
void adam_step(network::NetworkParams& params, const network::NetworkParams& grads,
               AdamState& state, double lr, bool update_bank = true);

struct EpochLog {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  LossBreakdown loss;  // sample-weighted means over the epoch
  std::optional<double> psnr_val;
};

/// LR/HR luma pair for per-epoch validation; both dims multiples of the block size.
struct ValidationImage {
  dataio::ImagePlane lr;
  dataio::ImagePlane hr;
};

struct TrainState {
  network::NetworkParams params;
  AdamState adam;
  int epoch = 0;  // completed epochs
  std::vector<EpochLog> history;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  /// Called after every epoch selected by checkpoint_every and after the last epoch.
  std::function<void(const TrainState&)> on_checkpoint;
};

/// Fresh state from cfg.arch and cfg.seed.
TrainState initial_state(const TrainConfig& cfg);

/// Runs epochs state.epoch + 1 .. cfg.epochs. Mini-batch order for an epoch depends only on
/// (seed, epoch), so a resumed run follows the uninterrupted trajectory.
/// Throws ConfigError on an empty dataset and NumericalError on a non-finite loss.
void train(std::span<const dataio::PatchPair> dataset, const TrainConfig& cfg, TrainState& state,
           std::span<const ValidationImage> validation = {}, const TrainHooks& hooks = {});

/// Mean PSNR (peak 255, shave = scale) of the network output against HR.
double validation_psnr(const network::NetworkParams& params,
                       std::span<const ValidationImage> validation, int shave);

/// Mini-batch permutation used for a given epoch (0-based).
std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, int epoch);

}  // namespace ordsr::optim

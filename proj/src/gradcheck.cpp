#include "ordsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace ordsr::gradcheck {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

// ReLU sign pattern of every hidden pre-activation.
std::vector<bool> activation_pattern(const Tensor& x, const network::NetworkParams& params) {
  const auto trace = network::forward(x, params, params.threshold());
  std::vector<bool> pattern;
  for (std::size_t l = 0; l + 1 < trace.cnn.pre_activations.size(); ++l) {
    for (double v : trace.cnn.pre_activations[l].data()) pattern.push_back(v > 0.0);
  }
  return pattern;
}

}  // namespace

Report check_training_loss(const Options& opts) {
  optim::TrainConfig cfg;
  cfg.arch = network::Architecture{8, opts.depth, opts.threshold, opts.hidden};
  cfg.sigma = opts.sigma;
  cfg.gamma = opts.gamma;
  cfg.epsilon = opts.epsilon;

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  network::NetworkParams params = network::init_params(cfg.arch, opts.seed);
  for (double& v : params.bank.filters.data()) v += 0.02 * noise(rng);
  for (auto& layer : params.layers) {
    for (double& v : layer.bias.data()) v = 0.05 * noise(rng);
  }

  const auto side = static_cast<std::size_t>(opts.size);
  const Shape shape{static_cast<std::size_t>(opts.batch), 1, side, side};
  Tensor x(shape), y(shape);
  for (double& v : x.data()) v = unit(rng);
  for (double& v : y.data()) v = unit(rng);

  const optim::LossResult analytic = optim::total_loss(x, y, params, cfg);
  const auto grad_slots = network::slots(analytic.grads);
  auto param_slots = network::slots(params);

  std::size_t total = 0;
  for (const auto& s : param_slots) total += s.tensor->size();
  std::uniform_int_distribution<std::size_t> bank_entry(0, params.bank.filters.size() - 1);
  std::uniform_int_distribution<std::size_t> any(0, total - 1);
  // Bank entries first, then entries drawn uniformly over all parameters.
  auto draw = [&](bool bank_only) -> std::pair<std::size_t, std::size_t> {
    if (bank_only) return {0, bank_entry(rng)};
    std::size_t flat = any(rng);
    for (std::size_t s = 0; s < param_slots.size(); ++s) {
      if (flat < param_slots[s].tensor->size()) return {s, flat};
      flat -= param_slots[s].tensor->size();
    }
    return {0, 0};
  };

  std::map<std::string, GroupReport> groups;
  Report report;
  const int max_attempts = 10 * opts.probes;
  for (int attempt = 0; report.probes < opts.probes && attempt < max_attempts; ++attempt) {
    const auto [slot, index] = draw(report.probes < std::min(opts.bank_probes, opts.probes));
    double& theta = (*param_slots[slot].tensor)[index];
    const double saved = theta;
    // Fourth-order central stencil over saved +/- h and +/- 2h.
    double f[4];
    std::vector<bool> patterns[4];
    const double offsets[4] = {2.0, 1.0, -1.0, -2.0};
    for (int k = 0; k < 4; ++k) {
      theta = saved + offsets[k] * opts.step;
      patterns[k] = activation_pattern(x, params);
      f[k] = optim::total_loss(x, y, params, cfg).loss.total;
    }
    theta = saved;
    if (!std::all_of(patterns + 1, patterns + 4, [&](const auto& p) { return p == patterns[0]; })) {
      ++report.kinks_skipped;
      continue;
    }
    const double numeric = (8.0 * (f[1] - f[2]) - (f[0] - f[3])) / (12.0 * opts.step);
    double a = (*grad_slots[slot].tensor)[index];
    if (opts.corrupt) a = a * 1.001 + 1e-6;
    const double err = relative_error(a, numeric, opts.floor);

    const std::string& group = param_slots[slot].name;
    auto& g = groups[group];
    g.name = group;
    g.probes += 1;
    g.max_rel_error = std::max(g.max_rel_error, err);
    report.probes += 1;
    report.max_rel_error = std::max(report.max_rel_error, err);
  }
  for (const auto& s : param_slots) {
    if (groups.count(s.name)) report.groups.push_back(groups[s.name]);
  }
  report.passed = report.probes >= opts.probes && report.max_rel_error < opts.tolerance;
  return report;
}

}  // namespace ordsr::gradcheck

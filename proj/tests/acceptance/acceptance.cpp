// Acceptance suite. Usage:
//   ordsr_acceptance criterion <1..10> [results-dir]
//   ordsr_acceptance train <run> <results-dir>     run: full, no-ortho, frozen-bank, t2, t8, t16
//   ordsr_acceptance all <results-dir>
// Each criterion prints one "criterion N: PASS|FAIL|SKIP ..." line. Exit 0 on pass, 1 on fail,
// 77 on skip.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "../unit/oracles.hpp"
#include "ordsr/dataio.hpp"
#include "ordsr/gradcheck.hpp"
#include "ordsr/metrics.hpp"
#include "ordsr/network.hpp"
#include "ordsr/optim.hpp"
#include "ordsr/pipeline.hpp"
#include "ordsr/transform.hpp"

namespace fs = std::filesystem;
using namespace ordsr;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kPass = 0, kFail = 1, kSkip = 77;

const fs::path kNatural = fs::path(ORDSR_TEST_DATA) / "natural";
const std::vector<std::string> kHeldOut = {"astronaut", "camera", "chelsea", "flower", "text"};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int report(int n, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return pass ? kPass : kFail;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// --- 1: transform correctness ---------------------------------------------------------

int criterion1() {
  const auto t0 = Clock::now();
  const auto bank = transform::make_dct_bank();
  std::mt19937_64 rng(2024);
  double oracle_err = 0.0, recon_err = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Tensor x = oracle::random_tensor({1, 1, 32, 32}, rng, 0.0, 1.0);
    const Tensor cube = transform::analyze(x, bank);
    oracle_err = std::max(oracle_err, max_abs_diff(cube, oracle::block_dct(x, 8, oracle::jpeg_zigzag8())));
    recon_err = std::max(recon_err, max_abs_diff(transform::synthesize(cube, bank), x));
  }
  const double t = seconds_since(t0);
  return report(1, oracle_err < 1e-10 && recon_err < 1e-8 && t < 5.0,
                fmt("max |analyze - block DCT| %.2e (< 1e-10), max reconstruction error %.2e (< 1e-8), %.2f s (< 5 s)",
                    oracle_err, recon_err, t));
}

// --- 2: orthogonality at init ----------------------------------------------------------

int criterion2() {
  const auto bank = transform::make_dct_bank();
  const Tensor gram = transform::gram_matrix(bank);
  double gram_err = 0.0;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) gram_err = std::max(gram_err, std::abs(gram.at(0, 0, i, j) - (i == j ? 1.0 : 0.0)));
  const double penalty = transform::ortho_penalty(bank, 0.0).value;
  return report(2, gram_err < 1e-10 && std::abs(penalty) < 1e-12,
                fmt("max |Gram - I| %.2e (< 1e-10), ortho_penalty(eps=0) %.2e (< 1e-12)", gram_err, penalty));
}

// --- 3: end-to-end gradients -----------------------------------------------------------

int criterion3() {
  const auto t0 = Clock::now();
  gradcheck::Options opts;  // 16x16 input, D=3, T=4, 500 probes, 128 of them in the bank
  const auto r = gradcheck::check_training_loss(opts);
  const double t = seconds_since(t0);
  int bank = 0;
  for (const auto& g : r.groups)
    if (g.name == "bank") bank = g.probes;
  for (const auto& g : r.groups) std::printf("  %-14s probes %4d  max rel error %.2e\n", g.name.c_str(), g.probes, g.max_rel_error);
  return report(3, r.passed && r.probes >= 500 && bank > 0 && r.max_rel_error < 1e-5 && t < 120.0,
                fmt("%.0f probes (%.0f in the bank, %.0f kinks skipped), max relative error %.2e (< 1e-5), ", r.probes, bank,
                    r.kinks_skipped, r.max_rel_error) +
                    fmt("%.1f s (< 120 s)", t));
}

// --- 4: identity at zero residual ------------------------------------------------------

int criterion4() {
  auto params = network::init_params({}, 5);
  network::zero_cnn(params);
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Tensor x = oracle::random_tensor({1, 1, 48, 40}, rng, 0.0, 1.0);
    worst = std::max(worst, max_abs_diff(network::infer(x, params), x));
  }
  return report(4, worst < 1e-8, fmt("max ||y_hat - x||_inf over 20 inputs %.2e (< 1e-8)", worst));
}

// --- desk-scale training runs (5, 6, 8) --------------------------------------------------

struct DeskRun {
  std::string name;
  optim::TrainMode mode = optim::TrainMode::Full;
  int threshold = 4;
};

const std::vector<DeskRun> kRuns = {{"full", optim::TrainMode::Full, 4},
                                    {"no-ortho", optim::TrainMode::NoOrtho, 4},
                                    {"frozen-bank", optim::TrainMode::FrozenBank, 4},
                                    {"t2", optim::TrainMode::Full, 2},
                                    {"t8", optim::TrainMode::Full, 8},
                                    {"t16", optim::TrainMode::Full, 16}};

optim::TrainConfig desk_config(const DeskRun& run) {
  optim::TrainConfig cfg;  // published defaults for lr, decay, clip, sigma, gamma, epsilon
  cfg.arch = {8, 6, run.threshold, 64};
  cfg.epochs = 30;
  cfg.batch_size = 64;
  cfg.seed = 1;
  cfg.mode = run.mode;
  cfg.scale = 2;
  return cfg;
}

struct Split {
  std::vector<fs::path> train, held_out;
};

Split split_images() {
  Split s;
  for (const auto& p : pipeline::list_images(kNatural)) {
    const bool held = std::find(kHeldOut.begin(), kHeldOut.end(), p.stem().string()) != kHeldOut.end();
    (held ? s.held_out : s.train).push_back(p);
  }
  return s;
}

int train_run(const std::string& name, const fs::path& dir) {
  const auto it = std::find_if(kRuns.begin(), kRuns.end(), [&](const DeskRun& r) { return r.name == name; });
  if (it == kRuns.end()) {
    std::fprintf(stderr, "unknown run %s\n", name.c_str());
    return 2;
  }
  const auto cfg = desk_config(*it);
  const Split split = split_images();

  pipeline::PrepareOptions prep;
  prep.scale = cfg.scale;
  prep.max_patches = 2400;
  prep.seed = 1;
  const auto t0 = Clock::now();
  const auto data = pipeline::prepare_dataset(split.train, prep);

  auto state = optim::initial_state(cfg);
  optim::TrainHooks hooks;
  hooks.on_epoch = [&](const optim::EpochLog& e) {
    std::printf("[%s] epoch %2d  loss %.6f  (data %.6f)  %.0f s\n", name.c_str(), e.epoch, e.loss.total, e.loss.data,
                seconds_since(t0));
    std::fflush(stdout);
  };
  optim::train(data.patches, cfg, state, {}, hooks);
  const double train_seconds = seconds_since(t0);

  pipeline::EvalOptions eval;
  eval.scale = cfg.scale;
  nlohmann::json images = nlohmann::json::array();
  double sr = 0.0, bic = 0.0;
  for (const auto& p : split.held_out) {
    const auto row = pipeline::evaluate_image(p.stem().string(), dataio::read_image(p), &state.params, eval);
    images.push_back({{"image", row.image}, {"psnr", row.sr.psnr_db}, {"psnr_bicubic", row.bicubic.psnr_db}});
    sr += row.sr.psnr_db;
    bic += row.bicubic.psnr_db;
  }
  const double n = static_cast<double>(split.held_out.size());
  nlohmann::json out = {{"run", name},
                        {"threshold", cfg.arch.threshold},
                        {"mode", optim::to_string(cfg.mode)},
                        {"patches", data.patches.size()},
                        {"train_images", split.train.size()},
                        {"held_out_images", split.held_out.size()},
                        {"epochs", cfg.epochs},
                        {"seconds", train_seconds},
                        {"loss_first", state.history.front().loss.total},
                        {"loss_last", state.history.back().loss.total},
                        {"data_loss_first", state.history.front().loss.data},
                        {"data_loss_last", state.history.back().loss.data},
                        {"psnr", sr / n},
                        {"psnr_bicubic", bic / n},
                        {"images", images}};
  fs::create_directories(dir);
  std::ofstream(dir / (name + ".json")) << out.dump(2) << "\n";
  std::printf("[%s] held-out PSNR %.4f dB, bicubic %.4f dB, %.0f s\n", name.c_str(), sr / n, bic / n, train_seconds);
  return 0;
}

std::optional<nlohmann::json> load_run(const fs::path& dir, const std::string& name) {
  std::ifstream in(dir / (name + ".json"));
  if (!in) {
    std::printf("missing results for run '%s' in %s (run: ordsr_acceptance train %s <dir>)\n", name.c_str(),
                dir.string().c_str(), name.c_str());
    return std::nullopt;
  }
  return nlohmann::json::parse(in);
}

int criterion5(const fs::path& dir) {
  const auto r = load_run(dir, "full");
  if (!r) return report(5, false, "no training results");
  const double gain = (*r)["psnr"].get<double>() - (*r)["psnr_bicubic"].get<double>();
  const double ratio = (*r)["loss_last"].get<double>() / (*r)["loss_first"].get<double>();
  const double secs = (*r)["seconds"].get<double>();
  const bool data_ok = (*r)["patches"].get<int>() >= 2000 && (*r)["train_images"].get<int>() >= 10 &&
                       (*r)["held_out_images"].get<int>() >= 5;
  return report(5, data_ok && gain >= 0.3 && ratio < 0.5 && secs < 1800.0,
                fmt("%.0f patches; held-out PSNR %.4f dB vs bicubic %.4f dB, gain %.3f dB (>= 0.3); ",
                    (*r)["patches"].get<double>(), (*r)["psnr"].get<double>(), (*r)["psnr_bicubic"].get<double>(), gain) +
                    fmt("loss epoch 30 / epoch 1 = %.3f (< 0.5); %.0f s (< 1800 s)", ratio, secs));
}

int criterion6(const fs::path& dir) {
  const auto full = load_run(dir, "full");
  const auto none = load_run(dir, "no-ortho");
  const auto frozen = load_run(dir, "frozen-bank");
  if (!full || !none || !frozen) return report(6, false, "no training results");
  const double f = (*full)["psnr"], n = (*none)["psnr"], z = (*frozen)["psnr"];
  return report(6, f >= n && f >= z,
                fmt("held-out PSNR full %.4f, no-ortho %.4f, frozen-bank %.4f dB (full >= both)", f, n, z));
}

// --- 7: frequency sharing ---------------------------------------------------------------

int criterion7() {
  const auto bank = transform::make_dct_bank();
  const auto files = pipeline::list_images(kNatural);
  std::vector<double> hr_mean(64, 0.0), lr_mean(64, 0.0);
  bool high_lower_each = true;
  for (const auto& p : files) {
    const auto hr = dataio::crop_to_multiple(dataio::luma(dataio::read_image(p)), 24);
    const auto a = transform::spectrum_profile(hr.to_tensor(), bank);
    const auto b = transform::spectrum_profile(dataio::degrade(hr, 3).to_tensor(), bank);
    for (int k = 0; k < 64; ++k) {
      hr_mean[k] += a[k] / static_cast<double>(files.size());
      lr_mean[k] += b[k] / static_cast<double>(files.size());
    }
    for (int k = 48; k < 64; ++k) high_lower_each = high_lower_each && b[k] < a[k];
  }
  // Channels are numbered from 1: channel 1 is the DC filter.
  double worst_low = 0.0;
  int worst_channel = 1;
  for (int k = 0; k < 4; ++k) {
    const double rel = std::abs(lr_mean[k] - hr_mean[k]) / hr_mean[k];
    std::printf("  channel %d: HR %.5f  LR %.5f  relative difference %.4f\n", k + 1, hr_mean[k], lr_mean[k], rel);
    if (rel > worst_low) {
      worst_low = rel;
      worst_channel = k + 1;
    }
  }
  bool high_lower = true;
  for (int k = 48; k < 64; ++k) high_lower = high_lower && lr_mean[k] < hr_mean[k];
  return report(7, files.size() >= 10 && worst_low < 0.10 && high_lower && high_lower_each,
                fmt("%.0f images at x3; channels 1..4 worst relative difference %.4f at channel %.0f (< 0.10); ",
                    static_cast<double>(files.size()), worst_low, worst_channel) +
                    std::string("channels 49..64 lower for LR: ") + (high_lower && high_lower_each ? "yes" : "no"));
}

int criterion8(const fs::path& dir) {
  const auto t2 = load_run(dir, "t2"), t4 = load_run(dir, "full"), t8 = load_run(dir, "t8"), t16 = load_run(dir, "t16");
  if (!t2 || !t4 || !t8 || !t16) return report(8, false, "no training results");
  const double p2 = (*t2)["psnr"], p4 = (*t4)["psnr"], p8 = (*t8)["psnr"], p16 = (*t16)["psnr"];
  return report(8, std::abs(p2 - p4) < 0.1 && p16 < p4,
                fmt("held-out PSNR T=2 %.4f, T=4 %.4f, T=8 %.4f, T=16 %.4f dB", p2, p4, p8, p16) +
                    fmt(" (|T2 - T4| = %.4f < 0.1, T16 < T4)", std::abs(p2 - p4)));
}

// --- 9: bicubic anchor on Set5 ----------------------------------------------------------

int criterion9() {
  const char* env = std::getenv("ORDSR_SET5_DIR");
  if (env == nullptr || !fs::is_directory(env)) {
    std::printf("criterion 9: SKIP  set ORDSR_SET5_DIR to a directory holding the five Set5 HR images\n");
    return kSkip;
  }
  const auto files = pipeline::list_images(env);
  pipeline::EvalOptions opts;
  opts.scale = 3;
  opts.luma = pipeline::LumaConvention::Studio;
  double psnr = 0.0, ssim = 0.0;
  for (const auto& p : files) {
    const auto row = pipeline::evaluate_image(p.stem().string(), dataio::read_image(p), nullptr, opts);
    std::printf("  %-12s %.4f dB  %.4f\n", row.image.c_str(), row.bicubic.psnr_db, row.bicubic.ssim);
    psnr += row.bicubic.psnr_db / static_cast<double>(files.size());
    ssim += row.bicubic.ssim / static_cast<double>(files.size());
  }
  return report(9, files.size() == 5 && std::abs(psnr - 30.39) <= 0.15 && std::abs(ssim - 0.8678) <= 0.005,
                fmt("%.0f images, x3 bicubic mean %.4f dB (30.39 +/- 0.15), SSIM %.4f (0.8678 +/- 0.005)",
                    static_cast<double>(files.size()), psnr, ssim));
}

// --- 10: parameter budget ---------------------------------------------------------------

int criterion10() {
  constexpr std::size_t vdsr = (1 * 64 * 9 + 64) + 18 * (64 * 64 * 9 + 64) + (64 * 9 + 1);
  const std::size_t count = network::parameter_count(network::Architecture{8, 14, 4, 64});
  const double ratio = static_cast<double>(count) / static_cast<double>(vdsr);
  return report(10, ratio <= 0.75,
                fmt("D=14, T=4: %.0f trainable parameters, VDSR %.0f, ratio %.4f (<= 0.75)", static_cast<double>(count),
                    static_cast<double>(vdsr), ratio));
}

int run_criterion(int n, const fs::path& dir) {
  switch (n) {
    case 1: return criterion1();
    case 2: return criterion2();
    case 3: return criterion3();
    case 4: return criterion4();
    case 5: return criterion5(dir);
    case 6: return criterion6(dir);
    case 7: return criterion7();
    case 8: return criterion8(dir);
    case 9: return criterion9();
    case 10: return criterion10();
    default: std::fprintf(stderr, "no criterion %d\n", n); return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (args.size() >= 2 && args[0] == "criterion") {
      return run_criterion(std::stoi(args[1]), args.size() > 2 ? fs::path(args[2]) : fs::path("acceptance_results"));
    }
    if (args.size() == 3 && args[0] == "train") return train_run(args[1], args[2]);
    if (args.size() == 2 && args[0] == "all") {
      for (const auto& r : kRuns) train_run(r.name, args[1]);
      int failed = 0;
      for (int n = 1; n <= 10; ++n) failed += run_criterion(n, args[1]) == kFail;
      return failed == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  std::fprintf(stderr,
               "usage: ordsr_acceptance criterion <1..10> [results-dir]\n"
               "       ordsr_acceptance train <full|no-ortho|frozen-bank|t2|t8|t16> <results-dir>\n"
               "       ordsr_acceptance all <results-dir>\n");
  return 2;
}

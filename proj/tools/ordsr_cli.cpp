// ordsr command line: prepare, train, sr, eval, spectrum, filters, gradcheck, params.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ordsr/checkpoint.hpp"
#include "ordsr/dataio.hpp"
#include "ordsr/errors.hpp"
#include "ordsr/gradcheck.hpp"
#include "ordsr/metrics.hpp"
#include "ordsr/network.hpp"
#include "ordsr/optim.hpp"
#include "ordsr/pipeline.hpp"
#include "ordsr/transform.hpp"

namespace fs = std::filesystem;
using namespace ordsr;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

// VDSR: 20 layers of 3x3 convolutions, 64 channels, one luma channel in and out.
constexpr std::size_t kVdsrParams = (1 * 64 * 9 + 64) + 18 * (64 * 64 * 9 + 64) + (64 * 9 + 1);

// --- options -----------------------------------------------------------------------------

struct Common {
  std::string config;
  std::string run_dir;
  std::string runs_root = "runs";
};

struct PrepareArgs {
  std::string src, out, layout = "packed";
  int scale = 2, patch_size = 40, overlap = 10;
  bool augment = true;
  std::uint64_t seed = 1;
  std::size_t max_patches = 0;
};

struct TrainArgs {
  std::string manifest, resume, val_dir, mode = "full";
  optim::TrainConfig cfg;
};

struct SrArgs {
  std::string checkpoint, input, output;
  int scale = 0;
};

struct EvalArgs {
  std::string checkpoint, hr_dir, out, luma = "full";
  int scale = 3, shave = -1;
  bool bicubic_only = false;
};

struct SpectrumArgs {
  std::string image, checkpoint, out;
  int scale = 3;
};

struct FiltersArgs {
  std::string checkpoint, out, gram;
  int zoom = 4;
};

struct ParamsArgs {
  network::Architecture arch;
  std::string save;
  bool zero_cnn = false;
  std::uint64_t seed = 1;
};

struct Args {
  Common common;
  PrepareArgs prepare;
  TrainArgs train;
  SrArgs sr;
  EvalArgs eval;
  SpectrumArgs spectrum;
  FiltersArgs filters;
  gradcheck::Options gradcheck;
  ParamsArgs params;
};

void add_common(CLI::App* sub, Common& c, bool run_dir) {
  sub->add_option("--config", c.config, "key = value file; flags override its entries");
  if (run_dir) {
    sub->add_option("--run-dir", c.run_dir, "artifact directory (default: <runs-root>/<verb>-<timestamp>)");
    sub->add_option("--runs-root", c.runs_root, "parent of timestamped run directories");
  }
}

void add_arch(CLI::App* sub, network::Architecture& a) {
  sub->add_option("--depth", a.depth, "CNN conv layers")->check(CLI::PositiveNumber);
  sub->add_option("--threshold", a.threshold, "low-frequency channels copied through")
      ->check(CLI::PositiveNumber);
  sub->add_option("--hidden", a.hidden, "CNN hidden width")->check(CLI::PositiveNumber);
}

void build(CLI::App& app, Args& a) {
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* prep = app.add_subcommand("prepare", "build a patch dataset from a directory of images");
  add_common(prep, a.common, true);
  prep->add_option("--src", a.prepare.src, "directory of training images")->required();
  prep->add_option("--out", a.prepare.out, "manifest path (default: <run-dir>/manifest.json)");
  prep->add_option("--scale", a.prepare.scale)->check(CLI::IsMember({2, 3, 4}));
  prep->add_flag("--augment,!--no-augment", a.prepare.augment, "4 rotations x 4 scales");
  prep->add_option("--patch-size", a.prepare.patch_size);
  prep->add_option("--overlap", a.prepare.overlap);
  prep->add_option("--seed", a.prepare.seed);
  prep->add_option("--max-patches", a.prepare.max_patches, "seeded subset size, 0 keeps all");
  prep->add_option("--layout", a.prepare.layout)->check(CLI::IsMember({"packed", "per-pair"}));

  auto* tr = app.add_subcommand("train", "train a network on a prepared dataset");
  add_common(tr, a.common, true);
  auto& c = a.train.cfg;
  tr->add_option("--manifest", a.train.manifest)->required();
  tr->add_option("--mode", a.train.mode)->check(CLI::IsMember({"full", "no-ortho", "frozen-bank"}));
  add_arch(tr, c.arch);
  tr->add_option("--epochs", c.epochs);
  tr->add_option("--batch-size", c.batch_size);
  tr->add_option("--lr", c.lr0);
  tr->add_option("--decay", c.decay, "fractional LR reduction per period");
  tr->add_option("--decay-every", c.decay_every);
  tr->add_option("--clip", c.clip);
  tr->add_option("--sigma", c.sigma, "weight decay");
  tr->add_option("--gamma", c.gamma, "orthogonality weight");
  tr->add_option("--epsilon", c.epsilon, "orthogonality target");
  tr->add_option("--seed", c.seed);
  tr->add_option("--checkpoint-every", c.checkpoint_every, "0: final checkpoint only");
  tr->add_option("--resume", a.train.resume, "continue from a checkpoint");
  tr->add_option("--val-dir", a.train.val_dir, "HR images for per-epoch validation PSNR");

  auto* sr = app.add_subcommand("sr", "super-resolve one image");
  add_common(sr, a.common, true);
  sr->add_option("--checkpoint", a.sr.checkpoint)->required();
  sr->add_option("--input", a.sr.input)->required();
  sr->add_option("--output", a.sr.output, "PNG path (default: <run-dir>/<name>_sr.png)");
  sr->add_option("--scale", a.sr.scale, "0: the checkpoint's training scale");

  auto* ev = app.add_subcommand("eval", "PSNR/SSIM of SR and bicubic on a directory of HR images");
  add_common(ev, a.common, true);
  ev->add_option("--checkpoint", a.eval.checkpoint);
  ev->add_option("--hr-dir", a.eval.hr_dir)->required();
  ev->add_option("--scale", a.eval.scale)->check(CLI::IsMember({2, 3, 4}));
  ev->add_option("--shave", a.eval.shave, "border pixels ignored, -1: the scale");
  ev->add_option("--luma", a.eval.luma, "full: BT.601 full range, studio: 16..235")
      ->check(CLI::IsMember({"full", "studio"}));
  ev->add_flag("--bicubic-only", a.eval.bicubic_only);
  ev->add_option("--out", a.eval.out, "CSV path (default: <run-dir>/eval.csv)");

  auto* sp = app.add_subcommand("spectrum", "mean |coefficient| per channel of an image and its degraded version");
  add_common(sp, a.common, true);
  sp->add_option("--image", a.spectrum.image)->required();
  sp->add_option("--checkpoint", a.spectrum.checkpoint, "use a trained bank instead of the DCT");
  sp->add_option("--scale", a.spectrum.scale)->check(CLI::IsMember({2, 3, 4}));
  sp->add_option("--out", a.spectrum.out, "CSV path (default: <run-dir>/spectrum.csv)");

  auto* fi = app.add_subcommand("filters", "render the bank and its Gram matrix");
  add_common(fi, a.common, true);
  fi->add_option("--checkpoint", a.filters.checkpoint, "default: the initial DCT bank");
  fi->add_option("--out", a.filters.out, "PNG path (default: <run-dir>/filters.png)");
  fi->add_option("--gram", a.filters.gram, "CSV path (default: <run-dir>/gram.csv)");
  fi->add_option("--zoom", a.filters.zoom)->check(CLI::Range(1, 32));

  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the training gradients");
  add_common(gc, a.common, false);
  auto& g = a.gradcheck;
  gc->add_option("--seed", g.seed);
  gc->add_option("--size", g.size);
  gc->add_option("--batch", g.batch);
  gc->add_option("--depth", g.depth);
  gc->add_option("--threshold", g.threshold);
  gc->add_option("--hidden", g.hidden);
  gc->add_option("--probes", g.probes);
  gc->add_option("--bank-probes", g.bank_probes);
  gc->add_option("--step", g.step);
  gc->add_option("--tolerance", g.tolerance);
  gc->add_flag("--corrupt-gradient", g.corrupt, "perturb the analytic gradient (harness self-test)")
      ->group("");

  auto* pa = app.add_subcommand("params", "count trainable parameters");
  add_common(pa, a.common, false);
  add_arch(pa, a.params.arch);
  pa->add_option("--seed", a.params.seed);
  pa->add_option("--save", a.params.save, "write an initialized checkpoint");
  pa->add_flag("--zero-cnn", a.params.zero_cnn, "zero CNN weights in the saved checkpoint");
}

// --- config file -----------------------------------------------------------------------

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::pair<std::string, std::string>> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(n) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

std::string option_key(const std::string& arg) {
  if (arg.rfind("--", 0) != 0) return "";
  return arg.substr(2, arg.find('=') == std::string::npos ? std::string::npos : arg.find('=') - 2);
}

/// argv with config-file entries inserted after the verb, skipping keys given as flags.
std::vector<std::string> merge_config(const std::vector<std::string>& argv) {
  std::string config;
  std::set<std::string> given;
  for (std::size_t i = 1; i < argv.size(); ++i) {
    const std::string key = option_key(argv[i]);
    if (key.empty()) continue;
    given.insert(key);
    if (key == "no-augment") given.insert("augment");
    if (key == "config") {
      const auto eq = argv[i].find('=');
      if (eq != std::string::npos) config = argv[i].substr(eq + 1);
      else if (i + 1 < argv.size()) config = argv[i + 1];
    }
  }
  if (config.empty() || argv.size() < 2) return argv;
  std::vector<std::string> out{argv[0], argv[1]};
  for (const auto& [key, value] : read_config(config)) {
    if (given.count(key) || key == "config") continue;
    out.push_back("--" + key + "=" + value);
  }
  out.insert(out.end(), argv.begin() + 2, argv.end());
  return out;
}

/// Every long option of the subcommand with its effective value.
std::string resolved_config(const CLI::App* sub) {
  std::ostringstream os;
  for (const CLI::Option* opt : sub->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names[0] == "help" || names[0] == "config") continue;
    std::string value = opt->get_default_str();
    const bool flag = opt->get_expected_max() == 0;
    if (flag && value.empty()) value = "false";
    if (opt->count() > 0) {
      value = opt->as<std::string>();
      if (flag) value = opt->as<bool>() ? "true" : "false";
    }
    os << names[0] << " = " << value << "\n";
  }
  return os.str();
}

// --- run directories and logging ---------------------------------------------------------

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint64_t h = 1469598103934665603ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

fs::path open_run_dir(const Common& c, const std::string& verb, const CLI::App* sub,
                      nlohmann::json meta = {}) {
  fs::path dir = c.run_dir;
  if (dir.empty()) {
    dir = fs::path(c.runs_root) / (verb + "-" + timestamp());
    for (int k = 2; fs::exists(dir); ++k) dir = fs::path(c.runs_root) / (verb + "-" + timestamp() + "-" + std::to_string(k));
  }
  fs::create_directories(dir);
  const std::string resolved = resolved_config(sub);
  std::ofstream(dir / "config.txt") << resolved;
  meta["verb"] = verb;
  meta["started"] = timestamp();
  std::ofstream(dir / "run.json") << meta.dump(2) << "\n";
  std::cout << "run directory: " << dir.string() << "\n# resolved config\n" << resolved << std::flush;
  return dir;
}

void update_run_meta(const fs::path& dir, const nlohmann::json& extra) {
  nlohmann::json meta;
  if (std::ifstream in(dir / "run.json"); in) meta = nlohmann::json::parse(in);
  meta.update(extra);
  std::ofstream(dir / "run.json") << meta.dump(2) << "\n";
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

checkpoint::Checkpoint load_model(const std::string& path) {
  if (path.empty()) throw ConfigError("a checkpoint is required");
  return checkpoint::load(path);
}

// --- verbs -------------------------------------------------------------------------------

int cmd_prepare(const Args& a, const CLI::App* sub) {
  const auto& p = a.prepare;
  const auto sources = pipeline::list_images(p.src);
  const fs::path dir = open_run_dir(a.common, "prepare", sub);
  pipeline::PrepareOptions opts;
  opts.scale = p.scale;
  opts.augment = p.augment;
  opts.patch_size = p.patch_size;
  opts.overlap = p.overlap;
  opts.seed = p.seed;
  opts.max_patches = p.max_patches;
  const auto data = pipeline::prepare_dataset(sources, opts);
  for (const auto& s : data.skipped) std::cerr << "skipped " << s << "\n";
  if (data.patches.empty()) throw DataError("no patches produced from " + p.src);
  const fs::path manifest = p.out.empty() ? dir / "manifest.json" : fs::path(p.out);
  if (manifest.has_parent_path()) fs::create_directories(manifest.parent_path());
  pipeline::write_dataset(manifest, data,
                          p.layout == "per-pair" ? pipeline::StoreLayout::PerPair : pipeline::StoreLayout::Packed);
  update_run_meta(dir, {{"manifest", manifest.string()}, {"manifest_hash", hex64(file_hash(manifest))}});
  std::cout << "sources " << data.sources.size() << ", skipped " << data.skipped.size() << ", patches "
            << data.patches.size() << "\nmanifest " << manifest.string() << " (hash "
            << hex64(file_hash(manifest)) << ")\n";
  return kOk;
}

std::vector<optim::ValidationImage> load_validation(const std::string& dir, int scale) {
  std::vector<optim::ValidationImage> out;
  if (dir.empty()) return out;
  for (const auto& path : pipeline::list_images(dir)) {
    try {
      out.push_back(pipeline::make_validation(dataio::read_image(path), scale));
    } catch (const Error& e) {
      std::cerr << "skipped validation image " << path.string() << ": " << e.what() << "\n";
    }
  }
  return out;
}

int cmd_train(Args& a, const CLI::App* sub) {
  auto& cfg = a.train.cfg;
  cfg.mode = optim::parse_mode(a.train.mode);
  std::ifstream mf(a.train.manifest);
  if (!mf) throw DataError("cannot open manifest " + a.train.manifest);
  cfg.scale = nlohmann::json::parse(mf).value("scale", 2);
  optim::validate(cfg);

  optim::TrainState state;
  if (!a.train.resume.empty()) {
    auto ck = checkpoint::load(a.train.resume);
    checkpoint::require_compatible(ck.header, cfg);
    if (static_cast<int>(ck.header.scale) != cfg.scale) {
      throw ConfigError("checkpoint was trained at scale " + std::to_string(ck.header.scale) +
                        " but the manifest is scale " + std::to_string(cfg.scale));
    }
    if (ck.header.mode != cfg.mode || ck.header.seed != cfg.seed) {
      throw ConfigError("checkpoint mode/seed (" + optim::to_string(ck.header.mode) + ", " +
                        std::to_string(ck.header.seed) + ") differ from the requested run");
    }
    if (!ck.adam) throw ConfigError("checkpoint has no optimizer state to resume from");
    state = optim::TrainState{std::move(ck.params), std::move(*ck.adam), static_cast<int>(ck.header.epoch), {}};
  } else {
    state = optim::initial_state(cfg);
  }

  const auto patches = pipeline::load_dataset(a.train.manifest);
  const auto validation = load_validation(a.train.val_dir, cfg.scale);
  const fs::path dir = open_run_dir(a.common, "train", sub,
                                    {{"manifest", a.train.manifest},
                                     {"manifest_hash", hex64(file_hash(a.train.manifest))},
                                     {"seed", cfg.seed},
                                     {"resumed_from", a.train.resume}});
  std::cout << "patches " << patches.size() << ", parameters " << network::parameter_count(state.params)
            << ", starting after epoch " << state.epoch << "\n";

  const fs::path log_path = dir / "train_log.csv";
  const bool append = fs::exists(log_path) && !a.train.resume.empty();
  std::ofstream log(log_path, append ? std::ios::app : std::ios::trunc);
  if (!append) log << "epoch,lr,data_loss,l2_loss,ortho_loss,total,psnr_val\n";
  fs::create_directories(dir / "checkpoints");

  optim::TrainHooks hooks;
  hooks.on_epoch = [&](const optim::EpochLog& e) {
    log << e.epoch << "," << fmt(e.lr) << "," << fmt(e.loss.data) << "," << fmt(e.loss.l2) << ","
        << fmt(e.loss.ortho) << "," << fmt(e.loss.total) << ","
        << (e.psnr_val ? fmt(*e.psnr_val) : "") << "\n";
    log.flush();
    std::printf("epoch %4d  lr %.3g  loss %.6g  ortho %.4g%s\n", e.epoch, e.lr, e.loss.total, e.loss.ortho,
                e.psnr_val ? ("  val " + std::to_string(*e.psnr_val) + " dB").c_str() : "");
    std::fflush(stdout);
  };
  hooks.on_checkpoint = [&](const optim::TrainState& s) {
    const checkpoint::Checkpoint ck{checkpoint::make_header(cfg, s.epoch), s.params, s.adam};
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04d.ckpt", s.epoch);
    checkpoint::save(dir / "checkpoints" / name, ck);
    checkpoint::save(dir / "model.ckpt", ck);
  };
  try {
    optim::train(patches, cfg, state, validation, hooks);
  } catch (const NumericalError&) {
    log.flush();
    throw;
  }
  std::cout << "model " << (dir / "model.ckpt").string() << "\n";
  return kOk;
}

int cmd_sr(const Args& a, const CLI::App* sub) {
  const auto ck = load_model(a.sr.checkpoint);
  const int trained = static_cast<int>(ck.header.scale);
  const int scale = a.sr.scale > 0 ? a.sr.scale : trained;
  if (scale != trained) {
    std::cerr << "warning: checkpoint was trained for x" << trained << ", running x" << scale << "\n";
  }
  const auto image = dataio::read_image(a.sr.input);
  const fs::path dir = open_run_dir(a.common, "sr", sub);
  const auto t0 = std::chrono::steady_clock::now();
  const auto out = pipeline::sr_color(image, ck.params, scale);
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  const fs::path path = a.sr.output.empty() ? dir / (fs::path(a.sr.input).stem().string() + "_sr.png")
                                            : fs::path(a.sr.output);
  dataio::write_png(path, out);
  std::printf("%dx%d -> %dx%d in %.1f ms: %s\n", image.width(), image.height(), out.width(), out.height(), ms,
              path.string().c_str());
  return kOk;
}

int cmd_eval(const Args& a, const CLI::App* sub) {
  const auto& e = a.eval;
  std::optional<checkpoint::Checkpoint> ck;
  if (!e.bicubic_only) {
    ck = load_model(e.checkpoint);
    if (static_cast<int>(ck->header.scale) != e.scale) {
      std::cerr << "warning: checkpoint was trained for x" << ck->header.scale << ", evaluating x" << e.scale
                << "\n";
    }
  }
  const auto files = pipeline::list_images(e.hr_dir);
  if (files.empty()) throw DataError("no images in " + e.hr_dir);
  const fs::path dir = open_run_dir(a.common, "eval", sub);
  pipeline::EvalOptions opts;
  opts.scale = e.scale;
  opts.shave = e.shave;
  opts.luma = e.luma == "studio" ? pipeline::LumaConvention::Studio : pipeline::LumaConvention::FullRange;

  const fs::path csv_path = e.out.empty() ? dir / "eval.csv" : fs::path(e.out);
  std::ofstream csv(csv_path);
  csv << "image,scale,psnr,ssim,psnr_bicubic,ssim_bicubic\n";
  double sum[4] = {0, 0, 0, 0};
  int rows = 0;
  for (const auto& path : files) {
    pipeline::EvalRow row;
    try {
      row = pipeline::evaluate_image(path.stem().string(), dataio::read_image(path),
                                     ck ? &ck->params : nullptr, opts);
    } catch (const Error& err) {
      std::cerr << "skipped " << path.string() << ": " << err.what() << "\n";
      continue;
    }
    const double v[4] = {metrics::capped(row.sr.psnr_db), row.sr.ssim, metrics::capped(row.bicubic.psnr_db),
                         row.bicubic.ssim};
    csv << row.image << "," << e.scale << "," << fmt(v[0]) << "," << fmt(v[1]) << "," << fmt(v[2]) << ","
        << fmt(v[3]) << "\n";
    std::printf("%-24s psnr %8.4f  ssim %.4f  | bicubic %8.4f  %.4f\n", row.image.c_str(), v[0], v[1], v[2], v[3]);
    for (int k = 0; k < 4; ++k) sum[k] += v[k];
    ++rows;
  }
  if (rows == 0) throw DataError("no readable images in " + e.hr_dir);
  csv << "mean," << e.scale;
  for (double s : sum) csv << "," << fmt(s / rows);
  csv << "\n";
  std::printf("%-24s psnr %8.4f  ssim %.4f  | bicubic %8.4f  %.4f\n", "mean", sum[0] / rows, sum[1] / rows,
              sum[2] / rows, sum[3] / rows);
  std::cout << "report " << csv_path.string() << "\n";
  return kOk;
}

int cmd_spectrum(const Args& a, const CLI::App* sub) {
  const auto& s = a.spectrum;
  const auto bank = s.checkpoint.empty() ? transform::make_dct_bank() : load_model(s.checkpoint).params.bank;
  const int m = std::lcm(bank.n, s.scale);
  const auto hr = dataio::crop_to_multiple(dataio::luma(dataio::read_image(s.image)), m);
  const auto lr = dataio::degrade(hr, s.scale);
  const auto ph = transform::spectrum_profile(hr.to_tensor(), bank);
  const auto pl = transform::spectrum_profile(lr.to_tensor(), bank);
  const auto order = transform::zigzag_indices(bank.n);
  const fs::path dir = open_run_dir(a.common, "spectrum", sub);
  const fs::path path = s.out.empty() ? dir / "spectrum.csv" : fs::path(s.out);
  std::ofstream csv(path);
  csv << "index,k1,k2,hr,lr\n";
  for (std::size_t i = 0; i < ph.size(); ++i) {
    csv << i + 1 << "," << order[i].k1 << "," << order[i].k2 << "," << fmt(ph[i]) << "," << fmt(pl[i]) << "\n";
  }
  std::cout << "profile " << path.string() << " (" << ph.size() << " channels)\n";
  return kOk;
}

int cmd_filters(const Args& a, const CLI::App* sub) {
  const auto& f = a.filters;
  const auto bank = f.checkpoint.empty() ? transform::make_dct_bank() : load_model(f.checkpoint).params.bank;
  const fs::path dir = open_run_dir(a.common, "filters", sub);
  const int n = bank.n;
  const int cell = n * f.zoom;
  const int side = n * cell + (n + 1);
  dataio::ImagePlane tile(side, side, 1.0);
  for (int i = 0; i < bank.count(); ++i) {
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        lo = std::min(lo, bank.filters.at(i, 0, y, x));
        hi = std::max(hi, bank.filters.at(i, 0, y, x));
      }
    const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
    const int top = 1 + (i / n) * (cell + 1);
    const int left = 1 + (i % n) * (cell + 1);
    for (int y = 0; y < cell; ++y)
      for (int x = 0; x < cell; ++x) {
        const double v = bank.filters.at(i, 0, y / f.zoom, x / f.zoom);
        tile.at(top + y, left + x) = hi - lo > 1e-12 ? (v - lo) / span : 0.5;
      }
  }
  const fs::path png = f.out.empty() ? dir / "filters.png" : fs::path(f.out);
  dataio::Image img;
  img.planes.push_back(tile);
  dataio::write_png(png, img);

  const Tensor gram = transform::gram_matrix(bank);
  const fs::path gram_path = f.gram.empty() ? dir / "gram.csv" : fs::path(f.gram);
  std::ofstream csv(gram_path);
  const std::size_t k = static_cast<std::size_t>(bank.count());
  double off = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      csv << (j ? "," : "") << fmt(gram.at(0, 0, i, j));
      if (i != j) off = std::max(off, std::abs(gram.at(0, 0, i, j)));
    }
    csv << "\n";
  }
  std::printf("filters %s\ngram %s\nmax |off-diagonal| %.6g\ndistance to DCT bank %.6g\n", png.string().c_str(),
              gram_path.string().c_str(), off, transform::bank_distance(bank, transform::make_dct_bank(n)));
  return kOk;
}

int cmd_gradcheck(const Args& a, const CLI::App* sub) {
  std::cout << "# resolved config\n" << resolved_config(sub);
  const auto r = gradcheck::check_training_loss(a.gradcheck);
  std::printf("%-16s %7s %14s\n", "group", "probes", "max rel error");
  for (const auto& g : r.groups) std::printf("%-16s %7d %14.3e\n", g.name.c_str(), g.probes, g.max_rel_error);
  std::printf("probes %d, kinks skipped %d, max relative error %.3e, tolerance %.1e: %s\n", r.probes,
              r.kinks_skipped, r.max_rel_error, a.gradcheck.tolerance, r.passed ? "PASS" : "FAIL");
  return r.passed ? kOk : kNumerical;
}

int cmd_params(const Args& a, const CLI::App* sub) {
  std::cout << "# resolved config\n" << resolved_config(sub);
  const auto& p = a.params;
  network::validate(p.arch);
  const std::size_t count = network::parameter_count(p.arch);
  const double ratio = static_cast<double>(count) / static_cast<double>(kVdsrParams);
  std::printf("trainable parameters %zu (D=%d, T=%d, hidden=%d)\n", count, p.arch.depth, p.arch.threshold,
              p.arch.hidden);
  std::printf("VDSR %zu, ratio %.4f, 75%% budget %s\n", kVdsrParams, ratio, ratio <= 0.75 ? "met" : "exceeded");
  if (!p.save.empty()) {
    optim::TrainConfig cfg;
    cfg.arch = p.arch;
    cfg.seed = p.seed;
    auto params = network::init_params(p.arch, p.seed);
    if (p.zero_cnn) network::zero_cnn(params);
    checkpoint::save(p.save, {checkpoint::make_header(cfg, 0), params, std::nullopt});
    std::cout << "checkpoint " << p.save << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  CLI::App app{"ordsr: transform-domain super-resolution with a trainable orthogonal DCT layer"};
  build(app, args);
  try {
    std::vector<std::string> raw(argv, argv + argc);
    auto merged = merge_config(raw);
    std::reverse(merged.begin() + 1, merged.end());  // CLI11 consumes from the back
    merged.erase(merged.begin());
    app.parse(merged);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string verb = sub->get_name();
    if (verb == "prepare") return cmd_prepare(args, sub);
    if (verb == "train") return cmd_train(args, sub);
    if (verb == "sr") return cmd_sr(args, sub);
    if (verb == "eval") return cmd_eval(args, sub);
    if (verb == "spectrum") return cmd_spectrum(args, sub);
    if (verb == "filters") return cmd_filters(args, sub);
    if (verb == "gradcheck") return cmd_gradcheck(args, sub);
    if (verb == "params") return cmd_params(args, sub);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

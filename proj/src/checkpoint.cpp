#include "ordsr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "ordsr/errors.hpp"

namespace ordsr::checkpoint {
namespace {

constexpr char kMagic[8] = {'O', 'R', 'D', 'S', 'R', 'C', 'K', '1'};

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  void u32(std::uint32_t v) { bytes(v, 4); }
  void u64(std::uint64_t v) { bytes(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void tensor(const Tensor& t) {
    for (double v : t.data()) f64(v);
  }

 private:
  void bytes(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string name) : in_(in), name_(std::move(name)) {}
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes(4)); }
  std::uint64_t u64() { return bytes(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  void tensor(Tensor& t) {
    for (double& v : t.data()) v = f64();
  }

 private:
  std::uint64_t bytes(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      const int c = in_.get();
      if (c == std::char_traits<char>::eof()) throw DataError("truncated checkpoint " + name_);
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return v;
  }
  std::ifstream& in_;
  std::string name_;
};

void write_params(Writer& w, const network::NetworkParams& p) {
  for (const auto& slot : network::slots(p)) w.tensor(*slot.tensor);
}

void read_params(Reader& r, network::NetworkParams& p) {
  for (auto& slot : network::slots(p)) r.tensor(*slot.tensor);
}

nlohmann::json header_json(const Header& h) {
  return {{"format", "ORDSRCK1"},
          {"version", h.version},
          {"block", h.arch.block},
          {"depth", h.arch.depth},
          {"threshold", h.arch.threshold},
          {"hidden", h.arch.hidden},
          {"epsilon", h.epsilon},
          {"gamma", h.gamma},
          {"sigma", h.sigma},
          {"epoch", h.epoch},
          {"scale", h.scale},
          {"mode", optim::to_string(h.mode)},
          {"seed", h.seed}};
}

}  // namespace

Header make_header(const optim::TrainConfig& cfg, int epoch) {
  Header h;
  h.arch = cfg.arch;
  h.epsilon = cfg.epsilon;
  h.gamma = cfg.gamma;
  h.sigma = cfg.sigma;
  h.epoch = static_cast<std::uint32_t>(epoch);
  h.scale = static_cast<std::uint32_t>(cfg.scale);
  h.mode = cfg.mode;
  h.seed = cfg.seed;
  return h;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

void save(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const Header& h = ckpt.header;
  if (!(ckpt.params.architecture() == h.arch)) {
    throw ConsistencyError("checkpoint header does not describe the parameters");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof kMagic);
  Writer w(out);
  w.u32(h.version);
  w.u32(static_cast<std::uint32_t>(h.arch.block));
  w.u32(static_cast<std::uint32_t>(h.arch.depth));
  w.u32(static_cast<std::uint32_t>(h.arch.threshold));
  w.f64(h.epsilon);
  w.f64(h.gamma);
  w.f64(h.sigma);
  w.u32(h.epoch);
  w.u32(static_cast<std::uint32_t>(h.arch.hidden));
  w.u32(h.scale);
  w.u32(static_cast<std::uint32_t>(h.mode));
  w.u64(h.seed);
  w.u64(ckpt.adam ? static_cast<std::uint64_t>(ckpt.adam->step) : 0);
  w.u32(ckpt.adam ? 1 : 0);
  write_params(w, ckpt.params);
  if (ckpt.adam) {
    write_params(w, ckpt.adam->m);
    write_params(w, ckpt.adam->v);
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());

  auto meta = header_json(h);
  meta["adam_step"] = ckpt.adam ? ckpt.adam->step : 0;
  meta["parameters"] = network::parameter_count(ckpt.params);
  std::ofstream side(sidecar_path(path));
  side << meta.dump(2) << "\n";
}

Checkpoint load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw DataError(path.string() + " is not an ORDSR checkpoint");
  }
  Reader r(in, path.string());
  Checkpoint ckpt;
  Header& h = ckpt.header;
  h.version = r.u32();
  if (h.version != 1) throw DataError("unsupported checkpoint version " + std::to_string(h.version));
  h.arch.block = static_cast<int>(r.u32());
  h.arch.depth = static_cast<int>(r.u32());
  h.arch.threshold = static_cast<int>(r.u32());
  h.epsilon = r.f64();
  h.gamma = r.f64();
  h.sigma = r.f64();
  h.epoch = r.u32();
  h.arch.hidden = static_cast<int>(r.u32());
  h.scale = r.u32();
  const std::uint32_t mode = r.u32();
  if (mode > 2) throw DataError("invalid training mode in checkpoint");
  h.mode = static_cast<optim::TrainMode>(mode);
  h.seed = r.u64();
  const std::uint64_t step = r.u64();
  const bool has_moments = r.u32() != 0;
  try {
    network::validate(h.arch);
  } catch (const ParameterError& e) {
    throw DataError("invalid checkpoint architecture: " + std::string(e.what()));
  }
  ckpt.params = network::init_params(h.arch, 0);
  read_params(r, ckpt.params);
  if (has_moments) {
    optim::AdamState adam;
    adam.m = network::zeros_like(ckpt.params);
    adam.v = network::zeros_like(ckpt.params);
    read_params(r, adam.m);
    read_params(r, adam.v);
    adam.step = static_cast<std::int64_t>(step);
    ckpt.adam = std::move(adam);
  }
  return ckpt;
}

void require_compatible(const Header& header, const optim::TrainConfig& cfg) {
  if (!(header.arch == cfg.arch)) {
    throw ConfigError("checkpoint architecture (N=" + std::to_string(header.arch.block) +
                      ", D=" + std::to_string(header.arch.depth) +
                      ", T=" + std::to_string(header.arch.threshold) +
                      ", hidden=" + std::to_string(header.arch.hidden) +
                      ") does not match the configuration (N=" + std::to_string(cfg.arch.block) +
                      ", D=" + std::to_string(cfg.arch.depth) +
                      ", T=" + std::to_string(cfg.arch.threshold) +
                      ", hidden=" + std::to_string(cfg.arch.hidden) + ")");
  }
}

}  // namespace ordsr::checkpoint

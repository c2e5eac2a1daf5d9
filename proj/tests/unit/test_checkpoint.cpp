#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "ordsr/checkpoint.hpp"
#include "ordsr/errors.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace ordsr;
namespace ck = ordsr::checkpoint;
namespace net = ordsr::network;
namespace opt = ordsr::optim;

namespace {

bool same_params(const net::NetworkParams& a, const net::NetworkParams& b) {
  const auto sa = net::slots(a);
  const auto sb = net::slots(b);
  if (sa.size() != sb.size()) return false;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i].tensor->shape() != sb[i].tensor->shape()) return false;
    if (max_abs_diff(*sa[i].tensor, *sb[i].tensor) != 0.0) return false;
  }
  return true;
}

opt::TrainConfig small_config() {
  opt::TrainConfig cfg;
  cfg.arch = {8, 3, 4, 16};
  cfg.batch_size = 16;
  cfg.epochs = 4;
  cfg.seed = 9;
  cfg.mode = opt::TrainMode::NoOrtho;
  return cfg;
}

}  // namespace

TEST_CASE("checkpoint roundtrip") {
  TempDir dir;
  const auto cfg = small_config();
  auto state = opt::initial_state(cfg);
  state.adam.step = 17;
  state.adam.m.layers[1].weights[4] = 0.25;
  state.adam.v.bank.filters[9] = 1e-7;
  const ck::Checkpoint in{ck::make_header(cfg, 3), state.params, state.adam};
  const auto path = dir / "model.ckpt";
  ck::save(path, in);

  const auto out = ck::load(path);
  CHECK(same_params(in.params, out.params));
  REQUIRE(out.adam.has_value());
  CHECK(out.adam->step == 17);
  CHECK(same_params(in.adam->m, out.adam->m));
  CHECK(same_params(in.adam->v, out.adam->v));
  CHECK(out.header.epoch == 3);
  CHECK(out.header.arch.depth == 3);
  CHECK(out.header.arch.threshold == 4);
  CHECK(out.header.arch.hidden == 16);
  CHECK(out.header.mode == opt::TrainMode::NoOrtho);
  CHECK(out.header.seed == 9);
  CHECK(out.header.epsilon == cfg.epsilon);

  SUBCASE("sidecar mirrors the header") {
    std::ifstream js(ck::sidecar_path(path));
    REQUIRE(js);
    const auto j = nlohmann::json::parse(js);
    CHECK(j.at("depth") == 3);
    CHECK(j.at("threshold") == 4);
    CHECK(j.at("epoch") == 3);
    CHECK(j.at("mode") == "no-ortho");
  }
  SUBCASE("without optimizer moments") {
    ck::save(dir / "bare.ckpt", ck::Checkpoint{in.header, in.params, std::nullopt});
    const auto bare = ck::load(dir / "bare.ckpt");
    CHECK_FALSE(bare.adam.has_value());
    CHECK(same_params(in.params, bare.params));
  }
}

TEST_CASE("checkpoint errors") {
  TempDir dir;
  const auto cfg = small_config();
  const auto params = net::init_params(cfg.arch, 1);
  const auto path = dir / "m.ckpt";
  ck::save(path, {ck::make_header(cfg, 0), params, std::nullopt});

  SUBCASE("missing file") { CHECK_THROWS_AS(ck::load(dir / "absent.ckpt"), DataError); }
  SUBCASE("bad magic") {
    std::ofstream(dir / "junk.ckpt", std::ios::binary) << "NOTACKPT and some bytes";
    CHECK_THROWS_AS(ck::load(dir / "junk.ckpt"), DataError);
  }
  SUBCASE("truncated") {
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
    CHECK_THROWS_WITH_AS(ck::load(path), doctest::Contains("truncated"), DataError);
  }
  SUBCASE("header that disagrees with the parameters") {
    auto header = ck::make_header(cfg, 0);
    header.arch.depth = 5;
    CHECK_THROWS_AS(ck::save(dir / "x.ckpt", {header, params, std::nullopt}), ConsistencyError);
  }
  SUBCASE("compatibility") {
    const auto h = ck::load(path).header;
    CHECK_NOTHROW(ck::require_compatible(h, cfg));
    auto other = cfg;
    other.arch.threshold = 8;
    CHECK_THROWS_AS(ck::require_compatible(h, other), ConfigError);
  }
}

TEST_CASE("resume matches an uninterrupted run") {
  TempDir dir;
  auto cfg = small_config();
  const auto data = synthetic::patches(120, 2, 55);

  auto straight = opt::initial_state(cfg);
  opt::train(data, cfg, straight);

  auto first = cfg;
  first.epochs = 2;
  auto half = opt::initial_state(first);
  opt::train(data, first, half);
  ck::save(dir / "half.ckpt", {ck::make_header(first, half.epoch), half.params, half.adam});

  const auto loaded = ck::load(dir / "half.ckpt");
  ck::require_compatible(loaded.header, cfg);
  opt::TrainState resumed{loaded.params, *loaded.adam, static_cast<int>(loaded.header.epoch), {}};
  opt::train(data, cfg, resumed);

  CHECK(resumed.epoch == 4);
  CHECK(resumed.history.size() == 2);
  CHECK(same_params(straight.params, resumed.params));
  CHECK(resumed.history.back().loss.total == straight.history.back().loss.total);
}

#include <doctest.h>

#include "oracles.hpp"
#include "ordsr/errors.hpp"
#include "ordsr/network.hpp"
#include "ordsr/numerics.hpp"

using namespace ordsr;
namespace net = ordsr::network;

TEST_CASE("forward: zero residual is the identity") {
  auto params = net::init_params({8, 4, 4, 16}, 3);
  net::zero_cnn(params);
  std::mt19937_64 rng(21);
  const Tensor x = oracle::random_tensor({3, 1, 24, 16}, rng, 0.0, 1.0);
  const auto trace = net::forward(x, params, 4);
  CHECK(max_abs_diff(trace.y_hat, x) < 1e-8);
}

TEST_CASE("forward: shapes for a 40x40 patch at T = 4") {
  const auto params = net::init_params({8, 3, 4, 64}, 1);
  const auto trace = net::forward(Tensor(Shape{1, 1, 40, 40}, 0.5), params, 4);
  CHECK(trace.cube.shape() == Shape{1, 64, 5, 5});
  CHECK(trace.f_low.shape() == Shape{1, 4, 5, 5});
  CHECK(trace.f_high.shape() == Shape{1, 60, 5, 5});
  CHECK(trace.y_hat.shape() == Shape{1, 1, 40, 40});
  CHECK_THROWS_AS(net::forward(Tensor(Shape{1, 1, 40, 40}), params, 5), DimensionError);
  CHECK_THROWS_AS(net::forward(Tensor(Shape{1, 1, 36, 40}), params, 4), DimensionError);
}

TEST_CASE("forward: deterministic and finite") {
  const auto params = net::init_params({8, 3, 4, 32}, 9);
  std::mt19937_64 rng(22);
  const Tensor x = oracle::random_tensor({2, 1, 16, 16}, rng, 0.0, 1.0);
  const Tensor a = net::infer(x, params);
  const Tensor b = net::infer(x, params);
  CHECK(all_finite(a));
  CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
  CHECK(net::init_params({8, 3, 4, 32}, 9).layers[1].weights[17] == params.layers[1].weights[17]);
}

TEST_CASE("forward: f_low passes through bit for bit") {
  const auto params = net::init_params({8, 3, 6, 16}, 4);
  std::mt19937_64 rng(23);
  const auto trace = net::forward(oracle::random_tensor({2, 1, 16, 24}, rng, 0.0, 1.0), params, 6);
  const auto s = trace.cube.shape();
  for (std::size_t b = 0; b < s.n; ++b)
    for (std::size_t c = 0; c < 6; ++c)
      for (std::size_t y = 0; y < s.h; ++y)
        for (std::size_t x = 0; x < s.w; ++x) CHECK(trace.cube_hat.at(b, c, y, x) == trace.cube.at(b, c, y, x));
}

TEST_CASE("cnn_residual") {
  std::mt19937_64 rng(24);
  SUBCASE("zero weights give zero output") {
    auto params = net::init_params({8, 3, 4, 16}, 2);
    net::zero_cnn(params);
    const Tensor out = net::cnn_residual(oracle::random_tensor({1, 60, 3, 3}, rng), params.layers);
    CHECK(sum_squares(out) == 0.0);
  }
  SUBCASE("D = 1 is a single 3x3 convolution plus bias") {
    auto params = net::init_params({8, 1, 60, 16}, 2);
    REQUIRE(params.layers.size() == 1);
    CHECK(params.layers[0].weights.shape() == Shape{4, 4, 3, 3});
    for (double& v : params.layers[0].bias.data()) v = 0.25;
    const Tensor in = oracle::random_tensor({2, 4, 3, 5}, rng);
    Tensor expected = oracle::conv2d(in, params.layers[0].weights, 1, 1);
    for (double& v : expected.data()) v += 0.25;
    const Tensor out = net::cnn_residual(in, params.layers);
    CHECK(out.shape() == in.shape());
    CHECK(max_abs_diff(out, expected) < 1e-12);
  }
  SUBCASE("gradients match finite differences") {
    auto params = net::init_params({8, 3, 60, 6}, 5);
    for (auto& l : params.layers)
      for (double& v : l.bias.data()) v = 0.1;
    const Tensor in = oracle::random_tensor({2, 4, 3, 3}, rng);
    net::CnnTrace trace;
    const Tensor out = net::cnn_residual(in, params.layers, &trace);
    const auto grads = net::cnn_backward(trace, params.layers, Tensor(out.shape(), 1.0));
    auto loss = [&] {
      const Tensor out_now = net::cnn_residual(in, params.layers);
      double s = 0.0;
      for (double v : out_now.data()) s += v;
      return s;
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
      CHECK(oracle::max_relative_error(grads.layers[l].weights,
                                       oracle::numeric_gradient(params.layers[l].weights, loss)) < 1e-6);
      CHECK(oracle::max_relative_error(grads.layers[l].bias,
                                       oracle::numeric_gradient(params.layers[l].bias, loss)) < 1e-6);
    }
  }
  SUBCASE("channel mismatch") {
    const auto params = net::init_params({8, 2, 4, 8}, 1);
    CHECK_THROWS_AS(net::cnn_residual(Tensor(Shape{1, 61, 2, 2}), params.layers), DimensionError);
  }
}

TEST_CASE("backward") {
  std::mt19937_64 rng(25);
  auto params = net::init_params({8, 3, 4, 12}, 6);
  for (double& v : params.bank.filters.data()) v += 0.01 * (static_cast<double>(rng() % 1000) / 500.0 - 1.0);
  const Tensor x = oracle::random_tensor({2, 1, 16, 16}, rng, 0.0, 1.0);
  const auto trace = net::forward(x, params, 4);

  SUBCASE("zero upstream gives zero gradients") {
    const auto grads = net::backward(trace, params, Tensor::zeros_like(trace.y_hat));
    for (const auto& s : net::slots(grads)) CHECK(sum_squares(*s.tensor) == 0.0);
  }
  SUBCASE("bank gradient accumulates analysis and synthesis paths") {
    const Tensor up = oracle::random_tensor(trace.y_hat.shape(), rng);
    const auto grads = net::backward(trace, params, up);
    auto loss = [&] { return dot(up, net::infer(x, params)); };
    const Tensor numeric = oracle::numeric_gradient(params.bank.filters, loss, 1e-6);
    CHECK(oracle::max_relative_error(grads.bank.filters, numeric, 1e-8) < 1e-5);

    // Either path alone is not enough.
    const auto synth = numerics::transposed_conv2d_backward(trace.cube_hat, params.bank.filters, 8, up);
    CHECK(oracle::max_relative_error(synth.filters, numeric, 1e-8) > 1e-2);
  }
  SUBCASE("stale trace is rejected") {
    const auto other = net::init_params({8, 3, 8, 12}, 6);
    CHECK_THROWS_AS(net::backward(trace, other, Tensor::zeros_like(trace.y_hat)), ConsistencyError);
    CHECK_THROWS_AS(net::backward(trace, params, Tensor(Shape{1, 1, 8, 8})), ConsistencyError);
  }
}

TEST_CASE("parameter counts") {
  const net::Architecture defaults{8, 14, 4, 64};
  // 60->64, 12 x 64->64, 64->60 convolutions with biases, plus 64 8x8 CDCT filters.
  const std::size_t expected = (60 * 64 * 9 + 64) + 12 * (64 * 64 * 9 + 64) + (64 * 60 * 9 + 60) + 64 * 64;
  CHECK(net::parameter_count(defaults) == expected);
  CHECK(net::parameter_count(net::init_params(defaults, 1)) == expected);
  CHECK(net::init_params(defaults, 1).architecture() == defaults);
  CHECK_THROWS_AS(net::init_params({8, 0, 4, 64}, 1), ParameterError);
  CHECK_THROWS_AS(net::init_params({8, 3, 64, 64}, 1), ParameterError);
}

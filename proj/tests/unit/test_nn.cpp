#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fusedrive/common.hpp"
#include "fusedrive/nn.hpp"
#include "oracles.hpp"

using namespace fusedrive;
using namespace fusedrive::nn;

namespace {

MlpParams single_layer(std::vector<double> w, std::size_t rows, std::size_t cols, std::vector<double> b,
                       Activation a) {
  MlpParams net;
  LayerParams l;
  l.weights = Matrix(rows, cols);
  l.weights.data = std::move(w);
  l.bias = std::move(b);
  l.activation = a;
  net.layers.push_back(std::move(l));
  return net;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("init shapes and bounds") {
  const std::size_t dims[] = {4, 8, 2};
  const Activation acts[] = {Activation::relu, Activation::tanh};
  const auto net = init(dims, acts, 5);
  REQUIRE(net.layers.size() == 2);
  CHECK(net.layers[0].weights.rows == 8);
  CHECK(net.layers[0].weights.cols == 4);
  CHECK(net.layers[0].bias.size() == 8);
  CHECK(net.layers[1].weights.rows == 2);
  CHECK(net.layers[1].weights.cols == 8);
  CHECK(net.parameter_count() == 8 * 4 + 8 + 2 * 8 + 2);
  CHECK(net == init(dims, acts, 5));
  CHECK_FALSE(net == init(dims, acts, 6));
  for (const auto& l : net.layers)
    for (double b : l.bias) CHECK(b == 0.0);

  const std::size_t wide[] = {400, 3};
  const Activation lin[] = {Activation::linear};
  for (double w : init(wide, lin, 1).layers[0].weights.data) CHECK(std::abs(w) <= 0.05);
}

TEST_CASE("forward examples") {
  const auto identity = single_layer({1, 0, 0, 1}, 2, 2, {0, 0}, Activation::linear);
  CHECK(predict(identity, std::vector<double>{3.5, -2.0}) == std::vector<double>{3.5, -2.0});

  const auto th = single_layer({0.3, -0.7, 1.1, 0.2}, 2, 2, {0, 0}, Activation::tanh);
  CHECK(predict(th, std::vector<double>{0, 0}) == std::vector<double>{0, 0});

  const auto relu = single_layer({2}, 1, 1, {-1}, Activation::relu);
  CHECK(predict(relu, std::vector<double>{3})[0] == 5.0);
  CHECK(predict(relu, std::vector<double>{0})[0] == 0.0);

  CHECK_THROWS_AS(predict(relu, std::vector<double>{1, 2}), ContractViolation);
}

TEST_CASE("forward matches an independent evaluation and is repeatable") {
  fusedrive::Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const auto net = oracle::random_network(rng, 3, 10);
    const auto x = oracle::random_vector(rng, net.input_dim());
    const auto a = forward(net, x).output;
    CHECK(a == predict(net, x));
    const auto ref = oracle::evaluate(net, x);
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == doctest::Approx(ref[k]).epsilon(1e-13));
  }
}

TEST_CASE("tanh outputs stay strictly inside (-1, 1)") {
  const std::size_t dims[] = {3, 16, 2};
  const Activation acts[] = {Activation::relu, Activation::tanh};
  const auto net = init(dims, acts, 3);
  fusedrive::Rng rng(1);
  for (int i = 0; i < 1000; ++i)
    for (double y : predict(net, oracle::random_vector(rng, 3, -10, 10))) {
      CHECK(y > -1.0);
      CHECK(y < 1.0);
    }
}

TEST_CASE("backward on a linear layer") {
  const auto net = single_layer({1, 2, 3, 4, 5, 6}, 2, 3, {0.5, -0.5}, Activation::linear);
  const std::vector<double> x{1, -1, 2};
  const std::vector<double> g{0.3, -0.2};
  const auto pass = forward(net, x);
  const auto r = backward(net, pass.cache, g);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(r.param_grads.layers[0].weights(i, j) == doctest::Approx(g[i] * x[j]));
  CHECK(r.param_grads.layers[0].bias == g);
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(r.input_grad[j] == doctest::Approx(1 * g[0] * (j == 0) + 2 * g[0] * (j == 1) + 3 * g[0] * (j == 2) +
                                             4 * g[1] * (j == 0) + 5 * g[1] * (j == 1) + 6 * g[1] * (j == 2)));
}

TEST_CASE("zero output gradient gives zero gradients") {
  fusedrive::Rng rng(3);
  const auto net = oracle::random_network(rng, 3, 6);
  const auto pass = forward(net, oracle::random_vector(rng, net.input_dim()));
  const auto r = backward(net, pass.cache, std::vector<double>(net.output_dim(), 0.0));
  for (const auto& l : r.param_grads.layers) {
    for (double v : l.weights.data) CHECK(v == 0.0);
    for (double v : l.bias) CHECK(v == 0.0);
  }
  for (double v : r.input_grad) CHECK(v == 0.0);
}

TEST_CASE("backward rejects a mismatched cache") {
  fusedrive::Rng rng(4);
  const std::size_t d1[] = {3, 5, 2};
  const std::size_t d2[] = {3, 4, 2};
  const Activation acts[] = {Activation::relu, Activation::linear};
  const auto a = init(d1, acts, 1);
  const auto b = init(d2, acts, 1);
  const auto pass = forward(a, std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(backward(b, pass.cache, std::vector<double>{1, 1}), ContractViolation);
  CHECK_THROWS_AS(backward(a, pass.cache, std::vector<double>{1}), ContractViolation);
}

TEST_CASE("backward matches central finite differences") {
  fusedrive::Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    // dims up to [10, 8, 8, 2]
    std::vector<std::size_t> dims{1 + rng.index(10), 1 + rng.index(8), 1 + rng.index(8), 1 + rng.index(2)};
    const Activation acts[] = {Activation::relu, Activation::tanh, static_cast<Activation>(rng.index(3))};
    auto net = init(dims, acts, rng.next_u64());
    for (auto& l : net.layers)
      for (double& b : l.bias) b = rng.uniform(-0.5, 0.5);
    const auto x = oracle::random_vector(rng, dims[0]);
    const auto g = oracle::random_vector(rng, net.output_dim());
    const auto r = backward(net, forward(net, x).cache, g);
    const auto fd = oracle::finite_difference(net, x, g);
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      for (std::size_t k = 0; k < fd.weights[li].size(); ++k)
        CHECK(oracle::close(r.param_grads.layers[li].weights.data[k], fd.weights[li][k]));
      for (std::size_t k = 0; k < fd.bias[li].size(); ++k)
        CHECK(oracle::close(r.param_grads.layers[li].bias[k], fd.bias[li][k]));
    }
    for (std::size_t k = 0; k < x.size(); ++k) CHECK(oracle::close(r.input_grad[k], fd.input[k]));
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    fusedrive::Rng rng(1);
    auto net = oracle::random_network(rng, 2, 5);
    const auto before = net;
    auto st = AdamState::for_params(net);
    adam_step(net, Gradients::zeros_like(net), st, 1e-3);
    CHECK(net == before);
    CHECK(st.step == 1);
  }
  SUBCASE("constant gradient gives steps of lr * sign(g)") {
    auto net = single_layer({0.0}, 1, 1, {0.0}, Activation::linear);
    auto g = Gradients::zeros_like(net);
    g.layers[0].weights.data[0] = -3.0;
    g.layers[0].bias[0] = 0.5;
    auto st = AdamState::for_params(net);
    double prev_w = 0.0, prev_b = 0.0;
    for (int i = 0; i < 200; ++i) {
      adam_step(net, g, st, 1e-2);
      const double dw = net.layers[0].weights.data[0] - prev_w;
      const double db = net.layers[0].bias[0] - prev_b;
      CHECK(dw == doctest::Approx(1e-2).epsilon(1e-5));
      CHECK(db == doctest::Approx(-1e-2).epsilon(1e-5));
      prev_w = net.layers[0].weights.data[0];
      prev_b = net.layers[0].bias[0];
    }
    CHECK(st.step == 200);
  }
  SUBCASE("identical runs are bit-identical") {
    fusedrive::Rng r1(9), r2(9);
    auto a = oracle::random_network(r1, 3, 6);
    auto b = oracle::random_network(r2, 3, 6);
    auto sa = AdamState::for_params(a), sb = AdamState::for_params(b);
    for (int i = 0; i < 50; ++i) {
      const auto x = oracle::random_vector(r1, a.input_dim());
      oracle::random_vector(r2, b.input_dim());
      const std::vector<double> g(a.output_dim(), 1.0);
      adam_step(a, backward(a, forward(a, x).cache, g).param_grads, sa, 1e-3);
      adam_step(b, backward(b, forward(b, x).cache, g).param_grads, sb, 1e-3);
    }
    CHECK(a == b);
  }
}

TEST_CASE("checkpoint byte accounting and round trip") {
  const std::size_t dims[] = {4, 8, 2};
  const Activation acts[] = {Activation::relu, Activation::tanh};
  auto net = init(dims, acts, 77);
  net.layers[0].bias[3] = -0.125;
  const auto bytes = encode_checkpoint(net);
  CHECK(checkpoint_header_size(2) == 8 + 1 + 4 + 2 * 9);
  CHECK(bytes.size() == checkpoint_header_size(2) + (8 * 4 + 8 + 2 * 8 + 2) * 8);
  CHECK(bytes.substr(0, 8) == "FDMLP001");

  const auto path = temp_file("fusedrive_nn_roundtrip.bin");
  save_checkpoint(net, path);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded == net);
  fusedrive::Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto x = oracle::random_vector(rng, 4);
    CHECK(predict(loaded, x) == predict(net, x));
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed checkpoints raise load errors") {
  const std::size_t dims[] = {3, 2};
  const Activation acts[] = {Activation::linear};
  const auto bytes = encode_checkpoint(init(dims, acts, 1));
  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, std::size_t{12}, bytes.size() - 1})
    CHECK_THROWS_AS(decode_checkpoint(std::string_view(bytes).substr(0, cut)), LoadError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), LoadError);
  auto wrong_magic = bytes;
  wrong_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(wrong_magic), LoadError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/path.bin"), LoadError);

  const auto path = temp_file("fusedrive_nn_truncated.bin");
  {
    std::ofstream f(path, std::ios::binary);
    f << bytes.substr(0, bytes.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(path), LoadError);
  std::filesystem::remove(path);
}

#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "lpforge/model.hpp"
#include "oracles.hpp"

using namespace lpforge;
using namespace lpforge::model;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("zero weights produce zero logits and a uniform softmax") {
  ModelParams p;
  p.weights = {Tensor({4, 3})};
  p.biases = {Tensor({4})};
  Tensor logits = forward_logits(p, Tensor::vector({1.0, 2.0, 3.0}));
  double lse = 0.0;
  for (double z : logits.data) {
    CHECK(z == 0.0);
    lse += std::exp(z);
  }
  double total = 0.0;
  for (double z : logits.data) total += std::exp(z) / lse;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identity layer passes the input through") {
  ModelParams p;
  Tensor w({2, 2});
  w.at(0, 0) = 1.0;
  w.at(1, 1) = 1.0;
  p.weights = {w};
  p.biases = {Tensor({2})};
  Tensor logits = forward_logits(p, Tensor::vector({1.0, 2.0}));
  CHECK(logits.data[0] == 1.0);
  CHECK(logits.data[1] == 2.0);
}

TEST_CASE("repeated forward is bit-identical") {
  ModelParams p = make_mlp(8, {16, 16}, 3, Activation::Relu, 2024);
  Tensor x({2, 8});
  for (std::size_t i = 0; i < x.numel(); ++i) x.data[i] = 0.1 * static_cast<double>(i) - 0.4;
  Tensor first = forward_logits(p, x);
  for (int r = 0; r < 10; ++r) {
    Tensor again = forward_logits(p, x);
    for (std::size_t i = 0; i < first.numel(); ++i) CHECK(first.data[i] == again.data[i]);
  }
}

TEST_CASE("uniform prediction loss is ln C") {
  ModelParams p;
  p.weights = {Tensor({5, 2})};
  p.biases = {Tensor({5})};
  auto lg = xent_loss_and_grads(p, Tensor::vector({0.4, 0.6}), {3});
  CHECK(lg.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("confident correct prediction drives the loss to zero") {
  ModelParams p;
  Tensor w({3, 2});
  p.weights = {w};
  Tensor b({3});
  b.data = {50.0, -50.0, -50.0};
  p.biases = {b};
  auto lg = xent_loss_and_grads(p, Tensor::vector({0.0, 0.0}), {0});
  CHECK(lg.loss < 1e-12);
}

TEST_CASE("input and parameter gradients match finite differences") {
  const std::size_t d = 10, batch = 4;
  ModelParams params = make_mlp(d, {12}, 3, Activation::Relu, 99);
  RngStream rng(3, "model-fd");
  Tensor x({batch, d});
  for (auto& v : x.data) v = rng.normal();
  std::vector<int> y{0, 2, 1, 2};

  LossGrads lg = xent_loss_and_grads(params, x, y);
  const double h = 1e-5;

  // per-sample input gradients: FD on the individual sample's loss
  for (std::size_t s = 0; s < batch; ++s) {
    Tensor xs({1, d});
    std::copy(x.data.begin() + static_cast<long>(s * d),
              x.data.begin() + static_cast<long>((s + 1) * d), xs.data.begin());
    for (std::size_t i = 0; i < d; ++i) {
      Tensor xp = xs, xm = xs;
      xp.data[i] += h;
      xm.data[i] -= h;
      double fp = xent_loss(params, xp, {y[s]}).first;
      double fm = xent_loss(params, xm, {y[s]}).first;
      double fd = (fp - fm) / (2.0 * h);
      double rel = std::fabs(lg.input_grads[s][i] - fd) / std::max(1e-6, std::fabs(fd));
      CHECK(rel < 1e-4);
    }
  }

  // parameter gradients: FD on the batch-mean loss
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].numel(); i += 7) {
      ModelParams pp = params, pm = params;
      pp.weights[l].data[i] += h;
      pm.weights[l].data[i] -= h;
      double fd =
          (xent_loss(pp, x, y).first - xent_loss(pm, x, y).first) / (2.0 * h);
      double rel = std::fabs(lg.weight_grads[l].data[i] - fd) / std::max(1e-6, std::fabs(fd));
      CHECK(rel < 1e-4);
    }
  }
}

TEST_CASE("per-sample gradients batch-meaned equal the batch gradient") {
  const std::size_t d = 6, batch = 5;
  ModelParams params = make_mlp(d, {8}, 4, Activation::GeluApprox, 7);
  RngStream rng(8, "model-mean");
  Tensor x({batch, d});
  for (auto& v : x.data) v = rng.normal();
  std::vector<int> y{0, 1, 2, 3, 1};
  LossGrads lg = xent_loss_and_grads(params, x, y);

  // gradient of the batch-mean loss w.r.t. one flattened input, via stacking
  for (std::size_t s = 0; s < batch; ++s) {
    for (std::size_t i = 0; i < d; ++i) {
      Tensor xp = x, xm = x;
      xp.data[s * d + i] += 1e-5;
      xm.data[s * d + i] -= 1e-5;
      double fd = (xent_loss(params, xp, y).first - xent_loss(params, xm, y).first) / 2e-5;
      double stacked = lg.input_grads[s][i] / static_cast<double>(batch);
      CHECK(std::fabs(stacked - fd) < 1e-8 * std::max(1.0, std::fabs(fd)) + 1e-10);
    }
  }
}

TEST_CASE("loss is permutation-invariant over the batch") {
  const std::size_t d = 5;
  ModelParams params = make_mlp(d, {6}, 3, Activation::Relu, 11);
  Tensor x({3, d});
  RngStream rng(17, "model-perm");
  for (auto& v : x.data) v = rng.normal();
  std::vector<int> y{2, 0, 1};

  double base = xent_loss(params, x, y).first;
  Tensor xp({3, d});
  std::vector<int> yp{y[2], y[0], y[1]};
  for (std::size_t r = 0; r < 3; ++r) {
    std::size_t src = (r + 2) % 3;
    std::copy(x.data.begin() + static_cast<long>(src * d),
              x.data.begin() + static_cast<long>((src + 1) * d),
              xp.data.begin() + static_cast<long>(r * d));
  }
  CHECK(xent_loss(params, xp, yp).first == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("sgd full step to the origin") {
  ModelParams p;
  p.weights = {Tensor({1, 2}, {3.0, -4.0})};
  p.biases = {Tensor({1}, {2.0})};
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::SgdMomentumCosine;
  cfg.lr_max = 1.0;
  cfg.lr_min = 1.0;
  cfg.momentum = 0.0;
  cfg.weight_decay = 0.0;
  cfg.total_epochs = 1;
  OptimizerState opt(cfg, p);
  std::vector<Tensor> gw{p.weights[0]}, gb{p.biases[0]};
  opt.step(p, gw, gb);
  for (double v : p.weights[0].data) CHECK(v == 0.0);
  CHECK(p.biases[0].data[0] == 0.0);
}

TEST_CASE("adam fixed point at zero gradient") {
  ModelParams p;
  p.weights = {Tensor({1, 2}, {3.0, -4.0})};
  p.biases = {Tensor({1}, {2.0})};
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::Adam;
  cfg.lr_max = 0.1;
  cfg.weight_decay = 0.0;
  OptimizerState opt(cfg, p);
  std::vector<Tensor> gw{Tensor({1, 2})}, gb{Tensor({1})};
  opt.step(p, gw, gb);
  CHECK(p.weights[0].data[0] == 3.0);
  CHECK(p.weights[0].data[1] == -4.0);
  CHECK(p.biases[0].data[0] == 2.0);
}

TEST_CASE("cosine schedule endpoints and midpoint") {
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::SgdMomentumCosine;
  cfg.lr_max = 0.2;
  cfg.lr_min = 0.001;
  cfg.total_epochs = 30;
  CHECK(cosine_lr(cfg, 0.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(cosine_lr(cfg, 30.0) == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(cosine_lr(cfg, 15.0) == doctest::Approx(0.5 * (0.2 + 0.001)).epsilon(1e-12));
  for (int t = 0; t <= 30; ++t) {
    double lr = cosine_lr(cfg, t);
    CHECK(lr >= cfg.lr_min - 1e-15);
    CHECK(lr <= cfg.lr_max + 1e-15);
  }
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  ModelParams p = make_mlp(7, {9, 5}, 4, Activation::GeluApprox, 31337);
  std::string path = temp_path("lpforge_test_ckpt.bin");
  save_checkpoint(p, path);
  ModelParams q = load_checkpoint(path);
  CHECK(q.activation == p.activation);
  CHECK(q.param_count() == p.param_count());

  Tensor x({2, 7});
  RngStream rng(5, "ckpt");
  for (auto& v : x.data) v = rng.normal();
  Tensor a = forward_logits(p, x);
  Tensor b = forward_logits(q, x);
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(a.data[i] == b.data[i]);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint loader rejects a corrupted magic") {
  ModelParams p = make_mlp(3, {4}, 2, Activation::Relu, 1);
  std::string path = temp_path("lpforge_test_ckpt_bad.bin");
  save_checkpoint(p, path);
  {
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    std::fputc('X', f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("error paths: empty batch and bad labels") {
  ModelParams p = make_mlp(3, {4}, 2, Activation::Relu, 1);
  CHECK_THROWS_AS(xent_loss_and_grads(p, Tensor({0, 3}), {}), std::invalid_argument);
  CHECK_THROWS_AS(xent_loss_and_grads(p, Tensor::vector({1, 2, 3}), {5}), std::invalid_argument);
  CHECK_THROWS_AS(forward_logits(p, Tensor::vector({1, 2})), std::invalid_argument);
}

TEST_CASE("dropout masks scale surviving units and keep gradients consistent") {
  const std::size_t d = 6, batch = 3;
  ModelParams params = make_mlp(d, {10}, 3, Activation::Relu, 55);
  RngStream mrng(9, "dropout");
  DropoutMasks masks = make_dropout_masks(params, batch, 0.4, mrng);
  REQUIRE(masks.masks.size() == 1);
  for (double m : masks.masks[0].data)
    CHECK((m == 0.0 || m == doctest::Approx(1.0 / 0.6)));

  Tensor x({batch, d});
  RngStream rng(10, "dropout-x");
  for (auto& v : x.data) v = rng.normal();
  std::vector<int> y{0, 1, 2};
  LossGrads lg = xent_loss_and_grads(params, x, y, &masks);
  // finite differences against the same fixed mask
  for (std::size_t i = 0; i < d; ++i) {
    Tensor xp = x, xm = x;
    xp.data[i] += 1e-5;
    xm.data[i] -= 1e-5;
    double fp = xent_loss_and_grads(params, xp, y, &masks).loss;
    double fm = xent_loss_and_grads(params, xm, y, &masks).loss;
    double fd = (fp - fm) / 2e-5 * static_cast<double>(batch);
    CHECK(std::fabs(lg.input_grads[0][i] - fd) < 1e-6 * std::max(1.0, std::fabs(fd)));
  }
}

}  // TEST_SUITE

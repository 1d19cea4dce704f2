/*!
 * Copyright (c) 2026 the mltr authors. All rights reserved.
 * Licensed under the Apache License, Version 2.0. See LICENSE file in the
 * project root for license information.
 */
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

#include "mltr/ranker.hpp"
#include "support/oracles.hpp"

using namespace mltr;

namespace {

std::vector<double> random_input(int dims, Rng& rng) {
  std::vector<double> x(dims);
  for (auto& v : x) v = 2.0 * rng.uniform_double() - 1.0;
  return x;
}

void randomize(ParameterVector& p, Rng& rng, double scale = 0.7) {
  for (auto& v : p.values) v = scale * (2.0 * rng.uniform_double() - 1.0);
}

}  // namespace

TEST_CASE("param_count covers weights and biases") {
  CHECK(param_count({5, 4, 1}, true) == 5 * 4 + 4 + 4 * 1 + 1);
  CHECK(param_count({5, 4, 1}, false) == 5 * 4 + 4 * 1);
  CHECK(param_count({1, 1}, false) == 1);
}

TEST_CASE("init_params is deterministic with zero biases") {
  const auto spec = RankerSpec::mlp(6, {8, 4});
  const auto a = init_params(spec, 42);
  const auto b = init_params(spec, 42);
  CHECK(a.values == b.values);
  const auto c = init_params(spec, 43);
  CHECK(a.values != c.values);

  // bias slots: after each weight block
  std::size_t at = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_dims.size(); ++l) {
    at += static_cast<std::size_t>(spec.layer_dims[l]) *
          spec.layer_dims[l + 1];
    for (int j = 0; j < spec.layer_dims[l + 1]; ++j)
      CHECK(a.values[at++] == 0.0);
  }
}

TEST_CASE("init_params weight variance matches the fan-scaled uniform law") {
  // var of U(-b, b) with b = sqrt(6/(fi+fo)) is 2/(fi+fo)
  RankerSpec spec;
  spec.layer_dims = {1000, 1000, 1};
  const auto p = init_params(spec, 7);
  const std::size_t n_w = 1000 * 1000;
  double mean = 0.0;
  for (std::size_t i = 0; i < n_w; ++i) mean += p.values[i];
  mean /= static_cast<double>(n_w);
  double var = 0.0;
  for (std::size_t i = 0; i < n_w; ++i)
    var += (p.values[i] - mean) * (p.values[i] - mean);
  var /= static_cast<double>(n_w);
  const double expected = 2.0 / (1000 + 1000);
  CHECK(std::fabs(var - expected) < 0.2 * expected);
}

TEST_CASE("all-zero parameters score zero") {
  ParameterVector p;
  p.layer_dims = {3, 2, 1};
  p.values.assign(param_count(p.layer_dims, true), 0.0);
  CHECK(score(p, std::vector<double>{0.3, -0.4, 0.9}) == 0.0);
}

TEST_CASE("1-to-1 network is w x + b") {
  ParameterVector p;
  p.layer_dims = {1, 1};
  p.values = {2.5, -0.75};  // w, b
  CHECK(score(p, std::vector<double>{2.0}) == Catch::Approx(2.5 * 2.0 - 0.75));
}

TEST_CASE("score matches an independent forward implementation") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    RankerSpec spec;
    spec.layer_dims = {5, 4, 1};
    auto p = init_params(spec, 100 + trial);
    randomize(p, rng);
    const auto x = random_input(5, rng);
    CHECK(std::fabs(score(p, x) - oracle::naive_mlp_score(p, x)) < 1e-12);
  }
}

TEST_CASE("score rejects mismatched input width") {
  const auto p = init_params(RankerSpec::mlp(4, {3}), 0);
  CHECK_THROWS_AS(score(p, std::vector<double>{1.0, 2.0}), DimensionMismatch);
}

TEST_CASE("zero upstream gradients give a zero parameter gradient") {
  Rng rng(3);
  auto p = init_params(RankerSpec::mlp(4, {3}), 5);
  randomize(p, rng);
  const auto x1 = random_input(4, rng);
  const auto x2 = random_input(4, rng);
  const auto g = grad_wrt_params(p, {x1, x2}, {0.0, 0.0});
  for (double v : g.values) CHECK(v == 0.0);
}

TEST_CASE("1-to-1 linear gradient has the closed form") {
  ParameterVector p;
  p.layer_dims = {1, 1};
  p.values = {1.5, 0.25};
  const std::vector<double> x = {3.0};
  const double upstream = 2.0;
  const auto g = grad_wrt_params(p, {x}, {upstream});
  CHECK(g.values[0] == Catch::Approx(upstream * x[0]));  // weight
  CHECK(g.values[1] == Catch::Approx(upstream));         // bias
}

TEST_CASE("parameter gradient matches finite differences") {
  Rng rng(23);
  RankerSpec spec;
  spec.layer_dims = {10, 8, 4, 1};
  auto p = init_params(spec, 11);
  randomize(p, rng);

  const int n_items = 6;
  std::vector<std::vector<double>> items;
  std::vector<double> upstream;
  for (int i = 0; i < n_items; ++i) {
    items.push_back(random_input(10, rng));
    upstream.push_back(2.0 * rng.uniform_double() - 1.0);
  }

  std::vector<std::span<const double>> views(items.begin(), items.end());
  const auto analytic = grad_wrt_params(p, views, upstream);

  auto f = [&](const std::vector<double>& values) {
    ParameterVector q = p;
    q.values = values;
    double acc = 0.0;
    for (int i = 0; i < n_items; ++i) acc += upstream[i] * score(q, items[i]);
    return acc;
  };
  const auto fd = oracle::finite_diff_grad(f, p.values, 1e-5);
  for (std::size_t i = 0; i < fd.size(); ++i)
    CHECK(oracle::rel_err(analytic.values[i], fd[i]) < 1e-4);
}

TEST_CASE("apply_sgd_step is pure and exact") {
  ParameterVector p;
  p.layer_dims = {1, 1};
  p.with_bias = false;
  p.values = {1.0};
  ParameterVector g = p;
  g.values = {2.0};

  const auto same = apply_sgd_step(p, g, 0.0);
  CHECK(same.values == p.values);

  ParameterVector zero = g;
  zero.values = {0.0};
  CHECK(apply_sgd_step(p, zero, 0.5).values == p.values);

  const auto stepped = apply_sgd_step(p, g, 0.1);
  CHECK(stepped.values[0] == Catch::Approx(0.8));
  CHECK(p.values[0] == 1.0);  // input untouched

  ParameterVector other;
  other.layer_dims = {2, 1};
  other.with_bias = false;
  other.values = {0.0, 0.0};
  CHECK_THROWS_AS(apply_sgd_step(p, other, 0.1), DimensionMismatch);
}

TEST_CASE("rectifier subgradient at zero is zero") {
  // one hidden unit held exactly at z = 0: its weight must receive no
  // gradient
  ParameterVector p;
  p.layer_dims = {1, 1, 1};
  p.with_bias = false;
  p.values = {0.0, 1.0};  // hidden w = 0 -> z = 0, output w = 1
  const std::vector<double> x = {1.0};
  const auto g = grad_wrt_params(p, {x}, {1.0});
  CHECK(g.values[0] == 0.0);
}

TEST_CASE("checkpoints round-trip bit exactly") {
  Rng rng(29);
  auto p = init_params(RankerSpec::mlp(7, {5, 3}), 77);
  randomize(p, rng);
  p.values[0] = -0.0;
  p.values[1] = 1e-300;

  Checkpoint ckpt;
  ckpt.params = p;
  ckpt.seed = 0xdeadbeefULL;
  ckpt.tag = "mlp";

  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  save_checkpoint(ckpt, buf);
  const auto loaded = load_checkpoint(buf);

  CHECK(loaded.seed == ckpt.seed);
  CHECK(loaded.tag == ckpt.tag);
  CHECK(loaded.params.layer_dims == p.layer_dims);
  CHECK(loaded.params.with_bias == p.with_bias);
  REQUIRE(loaded.params.values.size() == p.values.size());
  CHECK(std::memcmp(loaded.params.values.data(), p.values.data(),
                    p.values.size() * sizeof(double)) == 0);
}

TEST_CASE("load_checkpoint rejects corrupt streams") {
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  buf << "NOTACKPT";
  CHECK_THROWS_AS(load_checkpoint(buf), DataError);
}

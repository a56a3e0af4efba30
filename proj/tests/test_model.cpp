// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include <cmath>
#include <random>
#include <string>

#include "doctest.h"
#include "drh/model.hpp"
#include "oracles.hpp"

using namespace drh;

namespace {

// Parameters counted from the topology: bias-free convs, BN gamma+beta, FC with bias.
std::size_t count_by_hand(const NetworkConfig& c) {
  auto conv = [](std::size_t k, std::size_t in, std::size_t out) { return k * k * in * out; };
  auto bn = [](std::size_t ch) { return 2 * ch; };
  std::size_t total = conv(3, c.in_channels, c.stage_widths[0]) + bn(c.stage_widths[0]);
  std::size_t in = c.stage_widths[0];
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t w = c.stage_widths[s];
    for (std::size_t b = 0; b < c.block_counts[s]; ++b) {
      total += conv(3, in, w) + bn(w) + conv(3, w, w) + bn(w);
      if (in != w || (s > 0 && b == 0)) total += conv(1, in, w) + bn(w);
      in = w;
    }
  }
  return total + in * c.bits + c.bits;
}

NetworkConfig tiny_config() {
  NetworkConfig c;
  c.in_height = c.in_width = 8;
  c.stage_widths = {2, 3, 3, 4};
  c.block_counts = {1, 1, 1, 1};
  c.bits = 5;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_SUITE("drh-model") {
  TEST_CASE("18-layer preset at 64 bits has the golden parameter count") {
    NetworkConfig c;
    c.block_counts = block_preset("18-layer");
    c.bits = 64;
    const auto net = build_network<float>(c);
    CHECK(count_by_hand(c) == 179768);
    CHECK(net.parameter_count() == 179768);

    c.block_counts = block_preset("34-layer");
    CHECK(build_network<float>(c).parameter_count() == count_by_hand(c));
    CHECK_THROWS_AS(block_preset("50-layer"), Error);
  }

  TEST_CASE("smallest legal network builds and runs") {
    NetworkConfig c;
    c.in_height = c.in_width = kMinInputExtent;
    c.stage_widths = {1, 1, 1, 1};
    c.block_counts = {1, 1, 1, 1};
    c.bits = 1;
    auto net = build_network<float>(c);
    std::mt19937_64 rng(1);
    const auto x = oracle::random_tensor({3, 1, 8, 8}, rng).cast<float>();
    const auto h = forward_hash(net, x, Mode::kTrain);
    CHECK(h.shape() == Shape{3, 1});
    for (float v : h.values()) CHECK(std::abs(v) < 1.0f);
  }

  TEST_CASE("inputs too small for three downsamplings are rejected") {
    NetworkConfig c;
    c.in_height = kMinInputExtent - 1;
    CHECK_THROWS_AS(build_network<float>(c), Error);
    c = NetworkConfig{};
    c.bits = 0;
    CHECK_THROWS_AS(build_network<float>(c), Error);
  }

  TEST_CASE("zero input through a zeroed hash layer gives H = 0") {
    auto net = build_network<double>(tiny_config());
    net.hash_fc.weight.value.fill(0);
    net.hash_fc.bias.value.fill(0);
    const auto h = forward_hash(net, Tensor<double>({2, 1, 8, 8}), Mode::kEval);
    for (double v : h.values()) CHECK(v == 0.0);
  }

  TEST_CASE("identical images give identical rows in eval mode") {
    auto net = build_network<float>(tiny_config());
    std::mt19937_64 rng(2);
    auto one = oracle::random_tensor({1, 1, 8, 8}, rng);
    Tensor<float> batch({2, 1, 8, 8});
    for (std::size_t i = 0; i < 64; ++i) batch[i] = batch[64 + i] = static_cast<float>(one[i]);
    const auto h = forward_hash(net, batch, Mode::kEval);
    for (std::size_t k = 0; k < 5; ++k) CHECK(h.at(0, k) == h.at(1, k));
    CHECK_THROWS_AS(forward_hash(net, Tensor<float>({2, 1, 9, 8}), Mode::kEval), Error);
  }

  TEST_CASE("binarize uses sign with sign(0) = +1") {
    const auto codes = binarize(Tensor<float>({1, 3}, {0.3f, -0.7f, 0.0f}));
    CHECK(codes.values == std::vector<std::int8_t>{1, -1, 1});
    const double eps = 1e-3;
    const auto sat = binarize(Tensor<double>({2, 2}, {1 - eps, -(1 - eps), -(1 - eps), 1 - eps}));
    CHECK(sat.values == std::vector<std::int8_t>{1, -1, -1, 1});
  }

  TEST_CASE("a residual block with a silenced main branch passes its input through") {
    auto res = build_network<double>(tiny_config());
    auto cfg = tiny_config();
    cfg.residual = false;
    auto plain = build_network<double>(cfg);
    std::mt19937_64 rng(3);
    auto x = oracle::random_tensor({2, 2, 8, 8}, rng);
    for (auto& v : x.values()) v = std::abs(v);  // relu leaves non-negative input alone
    for (auto* net : {&res, &plain}) {
      auto& blk = net->blocks.front();
      REQUIRE_FALSE(blk.proj_conv.has_value());
      blk.bn2.gamma.value.fill(0);
      blk.bn2.beta.value.fill(0);
    }
    CHECK(block_forward(res.blocks.front(), x, Mode::kTrain) == x);
    const auto silenced = block_forward(plain.blocks.front(), x, Mode::kTrain);
    for (double v : silenced.values()) CHECK(v == 0.0);
  }

  TEST_CASE("checkpoint round trip is bit exact") {
    auto net = build_network<float>(tiny_config());
    std::mt19937_64 rng(4);
    const auto x = oracle::random_tensor({4, 1, 8, 8}, rng).cast<float>();
    forward_hash(net, x, Mode::kTrain);  // moves the running statistics off their defaults
    const std::map<std::string, std::string> extra{{"preset", "drh18"}, {"note", "x y"}};
    const auto bytes = serialize_checkpoint(net, extra);
    std::map<std::string, std::string> got;
    auto back = deserialize_checkpoint(bytes, &got);
    CHECK(got.at("preset") == "drh18");
    CHECK(got.at("note") == "x y");
    CHECK(back.config == net.config);
    CHECK(serialize_checkpoint(back, extra) == bytes);
    CHECK(forward_hash(back, x, Mode::kEval) == forward_hash(net, x, Mode::kEval));
  }

  TEST_CASE("corrupt checkpoints raise data errors") {
    const auto net = build_network<float>(tiny_config());
    const auto bytes = serialize_checkpoint(net, {});
    auto expect_data_error = [](const std::vector<std::uint8_t>& b) {
      try {
        deserialize_checkpoint(b);
        FAIL("accepted a corrupt checkpoint");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::kData);
      }
    };
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    expect_data_error(bad_magic);
    expect_data_error(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 3));
    auto trailing = bytes;
    trailing.push_back(0);
    expect_data_error(trailing);
    auto version = bytes;
    version[4] = 99;
    expect_data_error(version);
    CHECK_THROWS_AS(serialize_checkpoint(net, {{"bits", "3"}}), Error);
  }

  TEST_CASE("float and double copies of a network agree") {
    auto net = build_network<float>(tiny_config());
    auto dbl = network_cast<double>(net);
    std::mt19937_64 rng(6);
    const auto x = oracle::random_tensor({3, 1, 8, 8}, rng);
    const auto hf = forward_hash(net, x.cast<float>(), Mode::kTrain);
    const auto hd = forward_hash(dbl, x, Mode::kTrain);
    for (std::size_t i = 0; i < hf.size(); ++i) CHECK(hf[i] == doctest::Approx(hd[i]).epsilon(1e-4));
  }

  TEST_CASE("backward needs a train-mode pass") {
    auto net = build_network<double>(tiny_config());
    forward_hash(net, Tensor<double>({2, 1, 8, 8}, 0.5), Mode::kEval);
    CHECK_THROWS_AS(backward_hash(net, Tensor<double>({2, 5}, 1.0)), Error);
  }
}

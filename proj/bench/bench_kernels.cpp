// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
//
// Serial reference kernels against the OpenMP path, on shapes from the 18-layer network.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "drh/kernels.hpp"

namespace {

using namespace drh::kernels;

std::vector<float> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d;
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// range(0): channels; the spatial extent shrinks as channels grow, as in the network stages.
ConvGeometry geometry(const benchmark::State& state) {
  const auto ch = static_cast<std::size_t>(state.range(0));
  const std::size_t extent = 32 * 8 / ch;
  return make_conv_geometry(64, ch, extent, extent, ch, 3, 1, 1);
}

struct ConvBuffers {
  std::vector<float> input, weight, bias, output, grad_input, grad_weight, grad_bias;
  explicit ConvBuffers(const ConvGeometry& g)
      : input(noise(g.batch * g.in_c * g.in_plane(), 1)),
        weight(noise(g.out_c * g.patch(), 2)),
        bias(noise(g.out_c, 3)),
        output(noise(g.batch * g.out_c * g.out_plane(), 4)),
        grad_input(input.size()),
        grad_weight(weight.size()),
        grad_bias(bias.size()) {}
};

template <bool Serial>
void BM_ConvForward(benchmark::State& state) {
  const auto g = geometry(state);
  ConvBuffers b(g);
  for (auto _ : state) {
    if constexpr (Serial) {
      serial::conv2d_forward(g, b.input.data(), b.weight.data(), b.bias.data(), b.output.data());
    } else {
      omp::conv2d_forward(g, b.input.data(), b.weight.data(), b.bias.data(), b.output.data());
    }
    benchmark::DoNotOptimize(b.output.data());
  }
}

template <bool Serial>
void BM_ConvBackward(benchmark::State& state) {
  const auto g = geometry(state);
  ConvBuffers b(g);
  for (auto _ : state) {
    if constexpr (Serial) {
      serial::conv2d_backward(g, b.input.data(), b.weight.data(), b.output.data(), b.grad_input.data(),
                              b.grad_weight.data(), b.grad_bias.data());
    } else {
      omp::conv2d_backward(g, b.input.data(), b.weight.data(), b.output.data(), b.grad_input.data(),
                           b.grad_weight.data(), b.grad_bias.data());
    }
    benchmark::DoNotOptimize(b.grad_input.data());
  }
}

// range(0): database size; range(1): bits.
template <bool Serial>
void BM_HammingScan(benchmark::State& state) {
  const auto count = static_cast<std::size_t>(state.range(0));
  const auto words = (static_cast<std::size_t>(state.range(1)) + 63) / 64;
  std::mt19937_64 rng(5);
  std::vector<std::uint64_t> codes(count * words), query(words);
  for (auto& w : codes) w = rng();
  for (auto& w : query) w = rng();
  std::vector<std::uint32_t> dist(count);
  for (auto _ : state) {
    if constexpr (Serial) {
      serial::hamming_scan(codes.data(), count, words, query.data(), dist.data());
    } else {
      omp::hamming_scan(codes.data(), count, words, query.data(), dist.data());
    }
    benchmark::DoNotOptimize(dist.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(count));
}

}  // namespace

BENCHMARK(BM_ConvForward<true>)->Name("conv_forward/serial")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<false>)->Name("conv_forward/omp")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Name("conv_backward/serial")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Name("conv_backward/omp")->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HammingScan<true>)->Name("hamming_scan/serial")->Args({100000, 16})->Args({100000, 64});
BENCHMARK(BM_HammingScan<false>)->Name("hamming_scan/omp")->Args({100000, 16})->Args({100000, 64});

BENCHMARK_MAIN();

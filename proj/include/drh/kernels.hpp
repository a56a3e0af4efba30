// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#pragma once

// Hot loops of the toolkit. Each kernel exists twice:
//   serial::  direct textbook loops, kept as the reference for tests and benchmarks
//   omp::     the production path (im2col + blocked GEMM, OpenMP over independent rows)
// Both produce results that do not depend on the OpenMP thread count: every
// output element is accumulated by exactly one thread in a fixed order.

#include <cstddef>
#include <cstdint>

namespace drh::kernels {

struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_c = 0, in_h = 0, in_w = 0;
  std::size_t out_c = 0, out_h = 0, out_w = 0;
  std::size_t kernel_h = 0, kernel_w = 0;
  std::size_t stride = 1, pad = 0;

  std::size_t patch() const { return in_c * kernel_h * kernel_w; }
  std::size_t out_plane() const { return out_h * out_w; }
  std::size_t in_plane() const { return in_h * in_w; }
};

/// floor((in + 2*pad - kernel)/stride) + 1, or 0 when the window does not fit.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad);

ConvGeometry make_conv_geometry(std::size_t batch, std::size_t in_c, std::size_t in_h, std::size_t in_w,
                                std::size_t out_c, std::size_t kernel, std::size_t stride, std::size_t pad);

namespace serial {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias, T* output);

// grad_input / grad_bias may be null. Outputs are overwritten, not accumulated.
template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight, const T* grad_output,
                     T* grad_input, T* grad_weight, T* grad_bias);

void hamming_scan(const std::uint64_t* codes, std::size_t count, std::size_t words,
                  const std::uint64_t* query, std::uint32_t* distances);

}  // namespace serial

namespace omp {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias, T* output);

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight, const T* grad_output,
                     T* grad_input, T* grad_weight, T* grad_bias);

void hamming_scan(const std::uint64_t* codes, std::size_t count, std::size_t words,
                  const std::uint64_t* query, std::uint32_t* distances);

}  // namespace omp

}  // namespace drh::kernels

// Copyright 2026 The DRH Authors. Licensed under the Apache License, Version 2.0.
// See LICENSE in the project root.
#include "drh/kernels.hpp"

#include <algorithm>
#include <bit>
#include <vector>

#include "drh/error.hpp"

namespace drh::kernels {

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0 || in + 2 * pad < kernel) return 0;
  return (in + 2 * pad - kernel) / stride + 1;
}

ConvGeometry make_conv_geometry(std::size_t batch, std::size_t in_c, std::size_t in_h, std::size_t in_w,
                                std::size_t out_c, std::size_t kernel, std::size_t stride, std::size_t pad) {
  ConvGeometry g;
  g.batch = batch;
  g.in_c = in_c;
  g.in_h = in_h;
  g.in_w = in_w;
  g.out_c = out_c;
  g.kernel_h = kernel;
  g.kernel_w = kernel;
  g.stride = stride;
  g.pad = pad;
  g.out_h = conv_out_extent(in_h, kernel, stride, pad);
  g.out_w = conv_out_extent(in_w, kernel, stride, pad);
  return g;
}

namespace serial {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias, T* output) {
  const auto ih = static_cast<std::ptrdiff_t>(g.in_h);
  const auto iw = static_cast<std::ptrdiff_t>(g.in_w);
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < g.out_c; ++o) {
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          T acc = bias ? bias[o] : T(0);
          for (std::size_t c = 0; c < g.in_c; ++c) {
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
                const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
                if (y < 0 || y >= ih || x < 0 || x >= iw) continue;
                acc += weight[((o * g.in_c + c) * g.kernel_h + ky) * g.kernel_w + kx] *
                       input[((n * g.in_c + c) * g.in_h + y) * g.in_w + x];
              }
            }
          }
          output[((n * g.out_c + o) * g.out_h + oy) * g.out_w + ox] = acc;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight, const T* grad_output,
                     T* grad_input, T* grad_weight, T* grad_bias) {
  const auto ih = static_cast<std::ptrdiff_t>(g.in_h);
  const auto iw = static_cast<std::ptrdiff_t>(g.in_w);
  if (grad_input) std::fill(grad_input, grad_input + g.batch * g.in_c * g.in_plane(), T(0));
  std::fill(grad_weight, grad_weight + g.out_c * g.patch(), T(0));
  if (grad_bias) std::fill(grad_bias, grad_bias + g.out_c, T(0));
  for (std::size_t n = 0; n < g.batch; ++n) {
    for (std::size_t o = 0; o < g.out_c; ++o) {
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const T go = grad_output[((n * g.out_c + o) * g.out_h + oy) * g.out_w + ox];
          if (grad_bias) grad_bias[o] += go;
          for (std::size_t c = 0; c < g.in_c; ++c) {
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
                const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
                if (y < 0 || y >= ih || x < 0 || x >= iw) continue;
                const std::size_t wi = ((o * g.in_c + c) * g.kernel_h + ky) * g.kernel_w + kx;
                const std::size_t xi = ((n * g.in_c + c) * g.in_h + y) * g.in_w + x;
                grad_weight[wi] += go * input[xi];
                if (grad_input) grad_input[xi] += go * weight[wi];
              }
            }
          }
        }
      }
    }
  }
}

void hamming_scan(const std::uint64_t* codes, std::size_t count, std::size_t words,
                  const std::uint64_t* query, std::uint32_t* distances) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t d = 0;
    for (std::size_t w = 0; w < words; ++w) {
      std::uint64_t x = codes[i * words + w] ^ query[w];
      while (x) {
        d += static_cast<std::uint32_t>(x & 1u);
        x >>= 1;
      }
    }
    distances[i] = d;
  }
}

template void conv2d_forward<float>(const ConvGeometry&, const float*, const float*, const float*, float*);
template void conv2d_forward<double>(const ConvGeometry&, const double*, const double*, const double*, double*);
template void conv2d_backward<float>(const ConvGeometry&, const float*, const float*, const float*, float*,
                                     float*, float*);
template void conv2d_backward<double>(const ConvGeometry&, const double*, const double*, const double*,
                                      double*, double*, double*);

}  // namespace serial

namespace omp {
namespace {

// col[k * P + p] with k = (c, ky, kx), p = (oy, ox); zero outside the image.
template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* col) {
  const std::size_t P = g.out_plane();
  for (std::size_t c = 0; c < g.in_c; ++c) {
    const T* plane = image + c * g.in_plane();
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        T* row = col + ((c * g.kernel_h + ky) * g.kernel_w + kx) * P;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          T* dst = row + oy * g.out_w;
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h)) {
            std::fill(dst, dst + g.out_w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(y) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            dst[ox] = (x < 0 || x >= static_cast<std::ptrdiff_t>(g.in_w)) ? T(0) : src[x];
          }
        }
      }
    }
  }
}

// Transposed layout colT[p * Kc + k], used for the weight gradient.
template <typename T>
void im2col_transposed(const ConvGeometry& g, const T* image, T* colT) {
  const std::size_t Kc = g.patch();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      T* dst = colT + (oy * g.out_w + ox) * Kc;
      std::size_t k = 0;
      for (std::size_t c = 0; c < g.in_c; ++c) {
        const T* plane = image + c * g.in_plane();
        for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          const bool row_ok = y >= 0 && y < static_cast<std::ptrdiff_t>(g.in_h);
          for (std::size_t kx = 0; kx < g.kernel_w; ++kx, ++k) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            dst[k] = (row_ok && x >= 0 && x < static_cast<std::ptrdiff_t>(g.in_w))
                         ? plane[static_cast<std::size_t>(y) * g.in_w + static_cast<std::size_t>(x)]
                         : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const ConvGeometry& g, const T* col, T* image) {
  const std::size_t P = g.out_plane();
  for (std::size_t c = 0; c < g.in_c; ++c) {
    T* plane = image + c * g.in_plane();
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const T* row = col + ((c * g.kernel_h + ky) * g.kernel_w + kx) * P;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const auto y = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - static_cast<std::ptrdiff_t>(g.pad);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          T* dst = plane + static_cast<std::size_t>(y) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const auto x = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - static_cast<std::ptrdiff_t>(g.pad);
            if (x >= 0 && x < static_cast<std::ptrdiff_t>(g.in_w)) dst[x] += row[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

// out[o, p] (+)= sum_k w[o, k] * col[k, p], four output rows per pass over col.
template <typename T>
void gemm_rows(std::size_t rows, std::size_t inner, std::size_t P, const T* w, const T* col, T* out) {
  std::size_t o = 0;
  for (; o + 4 <= rows; o += 4) {
    T* o0 = out + (o + 0) * P;
    T* o1 = out + (o + 1) * P;
    T* o2 = out + (o + 2) * P;
    T* o3 = out + (o + 3) * P;
    for (std::size_t k = 0; k < inner; ++k) {
      const T w0 = w[(o + 0) * inner + k];
      const T w1 = w[(o + 1) * inner + k];
      const T w2 = w[(o + 2) * inner + k];
      const T w3 = w[(o + 3) * inner + k];
      const T* c = col + k * P;
#pragma omp simd
      for (std::size_t p = 0; p < P; ++p) {
        const T v = c[p];
        o0[p] += w0 * v;
        o1[p] += w1 * v;
        o2[p] += w2 * v;
        o3[p] += w3 * v;
      }
    }
  }
  for (; o < rows; ++o) {
    T* orow = out + o * P;
    for (std::size_t k = 0; k < inner; ++k) {
      const T wk = w[o * inner + k];
      const T* c = col + k * P;
#pragma omp simd
      for (std::size_t p = 0; p < P; ++p) orow[p] += wk * c[p];
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias, T* output) {
  const std::size_t P = g.out_plane();
  const std::size_t Kc = g.patch();
  const auto batch = static_cast<std::ptrdiff_t>(g.batch);
#pragma omp parallel
  {
    std::vector<T> col(Kc * P);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const T* img = input + static_cast<std::size_t>(n) * g.in_c * g.in_plane();
      T* out = output + static_cast<std::size_t>(n) * g.out_c * P;
      for (std::size_t o = 0; o < g.out_c; ++o) std::fill(out + o * P, out + (o + 1) * P, bias ? bias[o] : T(0));
      im2col(g, img, col.data());
      gemm_rows(g.out_c, Kc, P, weight, col.data(), out);
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight, const T* grad_output,
                     T* grad_input, T* grad_weight, T* grad_bias) {
  const std::size_t P = g.out_plane();
  const std::size_t Kc = g.patch();
  const auto batch = static_cast<std::ptrdiff_t>(g.batch);
  const auto out_c = static_cast<std::ptrdiff_t>(g.out_c);

  if (grad_bias) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < out_c; ++o) {
      T acc = 0;
      for (std::size_t n = 0; n < g.batch; ++n) {
        const T* go = grad_output + (n * g.out_c + static_cast<std::size_t>(o)) * P;
        for (std::size_t p = 0; p < P; ++p) acc += go[p];
      }
      grad_bias[o] = acc;
    }
  }

  // Weight gradient: rows of dW are owned by one thread; samples are visited in order.
  std::fill(grad_weight, grad_weight + g.out_c * Kc, T(0));
  std::vector<T> colT(P * Kc);
  for (std::size_t n = 0; n < g.batch; ++n) {
    im2col_transposed(g, input + n * g.in_c * g.in_plane(), colT.data());
    const T* go_n = grad_output + n * g.out_c * P;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t o = 0; o < out_c; ++o) {
      T* dw = grad_weight + static_cast<std::size_t>(o) * Kc;
      const T* go = go_n + static_cast<std::size_t>(o) * P;
      for (std::size_t p = 0; p < P; ++p) {
        const T gv = go[p];
        const T* c = colT.data() + p * Kc;
#pragma omp simd
        for (std::size_t k = 0; k < Kc; ++k) dw[k] += gv * c[k];
      }
    }
  }

  if (!grad_input) return;
  // dcol[k, p] = sum_o w[o, k] * dout[o, p]; computed as W^T dout with W^T built once.
  std::vector<T> weight_t(Kc * g.out_c);
  for (std::size_t o = 0; o < g.out_c; ++o)
    for (std::size_t k = 0; k < Kc; ++k) weight_t[k * g.out_c + o] = weight[o * Kc + k];
#pragma omp parallel
  {
    std::vector<T> dcol(Kc * P);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      std::fill(dcol.begin(), dcol.end(), T(0));
      gemm_rows(Kc, g.out_c, P, weight_t.data(), grad_output + static_cast<std::size_t>(n) * g.out_c * P,
                dcol.data());
      T* din = grad_input + static_cast<std::size_t>(n) * g.in_c * g.in_plane();
      std::fill(din, din + g.in_c * g.in_plane(), T(0));
      col2im_add(g, dcol.data(), din);
    }
  }
}

void hamming_scan(const std::uint64_t* codes, std::size_t count, std::size_t words,
                  const std::uint64_t* query, std::uint32_t* distances) {
  const auto n = static_cast<std::ptrdiff_t>(count);
  if (words == 1) {
    const std::uint64_t q = query[0];
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) distances[i] = static_cast<std::uint32_t>(std::popcount(codes[i] ^ q));
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::uint64_t* c = codes + static_cast<std::size_t>(i) * words;
    std::uint32_t d = 0;
    for (std::size_t w = 0; w < words; ++w) d += static_cast<std::uint32_t>(std::popcount(c[w] ^ query[w]));
    distances[i] = d;
  }
}

template void conv2d_forward<float>(const ConvGeometry&, const float*, const float*, const float*, float*);
template void conv2d_forward<double>(const ConvGeometry&, const double*, const double*, const double*, double*);
template void conv2d_backward<float>(const ConvGeometry&, const float*, const float*, const float*, float*,
                                     float*, float*);
template void conv2d_backward<double>(const ConvGeometry&, const double*, const double*, const double*,
                                      double*, double*, double*);

}  // namespace omp
}  // namespace drh::kernels

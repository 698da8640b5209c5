// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

// Differentiable primitives used by the autoencoder: 3x3 convolution with
// padding 1, its transpose, per-channel PReLU, and the Adam update.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "cae/error.hpp"
#include "cae/tensor.hpp"

namespace cae {

inline constexpr std::size_t kKernelSize = 3;
inline constexpr std::size_t kPadding = 1;

// One convolution layer. For a forward convolution `kernels` is
// (out_channels, in_channels, 3, 3). A transposed convolution uses the
// adjoint layout (in_channels, out_channels, 3, 3), so the same kernel tensor
// drives conv2d and its adjoint transposed_conv2d. `bias` and `prelu_slope`
// always have one entry per output channel.
template <typename T>
struct ConvLayerParams {
  Tensor<T> kernels;
  Tensor<T> bias;
  Tensor<T> prelu_slope;
  std::size_t stride = 1;
};

template <typename T>
struct ConvGradients {
  Tensor<T> input;
  Tensor<T> kernels;
  Tensor<T> bias;
};

template <typename T>
struct PreluGradients {
  Tensor<T> input;
  Tensor<T> slope;
};

// Output extent of a 3x3, padding-1 convolution.
inline std::size_t conv_output_extent(std::size_t in, std::size_t stride) {
  return (in + 2 * kPadding - kKernelSize) / stride + 1;
}

// Output extent of the matching transposed convolution. Stride-2 layers use
// output padding 1 so that extents exactly double.
inline std::size_t transposed_output_extent(std::size_t in,
                                            std::size_t stride) {
  return (in - 1) * stride + kKernelSize - 2 * kPadding + (stride - 1);
}

namespace detail {

inline long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Geometry of a forward 3x3/pad-1 correlation from a (in_h, in_w) plane to
// an (out_h, out_w) plane.
struct ConvGeometry {
  std::size_t in_h, in_w, out_h, out_w, stride;

  // Output positions o with 0 <= o*stride - 1 + k < in.
  static void valid_range(std::size_t k, std::size_t in, std::size_t out,
                          std::size_t stride, std::size_t& lo,
                          std::size_t& hi) {
    const long s = static_cast<long>(stride);
    const long first = -floor_div(static_cast<long>(k) - 1, s);
    const long last =
        floor_div(static_cast<long>(in) - static_cast<long>(k), s);
    lo = static_cast<std::size_t>(std::max(0L, first));
    hi = static_cast<std::size_t>(
        std::max(0L, std::min(static_cast<long>(out), last + 1)));
    if (hi < lo) hi = lo;
  }
};

inline void validate_stride(std::size_t stride) {
  if (stride != 1 && stride != 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "stride must be 1 or 2, got " + std::to_string(stride));
  }
}

template <typename T>
void validate_kernels(const Tensor<T>& kernels) {
  if (kernels.rank() != 4 || kernels.extent(2) != kKernelSize ||
      kernels.extent(3) != kKernelSize) {
    throw Error(ErrorKind::kShapeMismatch,
                "kernels must be (C, C', 3, 3), got " +
                    shape_string(kernels.shape()));
  }
}

template <typename T>
void validate_vector(const Tensor<T>& v, std::size_t n, const char* what) {
  if (v.rank() != 1 || v.extent(0) != n) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(what) + " must have shape (" + std::to_string(n) +
                    "), got " + shape_string(v.shape()));
  }
}

// out[n, a] += sum_b W[a, b] (*) in[n, b], where W is indexed through
// (a_stride, b_stride) so both kernel layouts share this loop.
template <typename T>
void correlate(const T* in, std::size_t in_ch, const T* weights,
               std::size_t w_stride_out, std::size_t w_stride_in, T* out,
               std::size_t out_ch, const ConvGeometry& g) {
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t out_plane = g.out_h * g.out_w;
  for (std::size_t co = 0; co < out_ch; ++co) {
    T* dst = out + co * out_plane;
    for (std::size_t ci = 0; ci < in_ch; ++ci) {
      const T* src = in + ci * in_plane;
      const T* w = weights + co * w_stride_out + ci * w_stride_in;
      for (std::size_t ky = 0; ky < kKernelSize; ++ky) {
        std::size_t y_lo, y_hi;
        ConvGeometry::valid_range(ky, g.in_h, g.out_h, g.stride, y_lo, y_hi);
        for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
          std::size_t x_lo, x_hi;
          ConvGeometry::valid_range(kx, g.in_w, g.out_w, g.stride, x_lo, x_hi);
          const T wv = w[ky * kKernelSize + kx];
          for (std::size_t oy = y_lo; oy < y_hi; ++oy) {
            const T* row = src + (oy * g.stride + ky - kPadding) * g.in_w;
            T* drow = dst + oy * g.out_w;
            if (g.stride == 1) {
              const T* r = row + kx - kPadding;
              for (std::size_t ox = x_lo; ox < x_hi; ++ox) {
                drow[ox] += wv * r[ox];
              }
            } else {
              for (std::size_t ox = x_lo; ox < x_hi; ++ox) {
                drow[ox] += wv * row[ox * g.stride + kx - kPadding];
              }
            }
          }
        }
      }
    }
  }
}

// Adjoint of correlate: in[n, b] += sum_a W[a, b] (*)^T out[n, a].
template <typename T>
void correlate_adjoint(const T* out, std::size_t out_ch, const T* weights,
                       std::size_t w_stride_out, std::size_t w_stride_in,
                       T* in, std::size_t in_ch, const ConvGeometry& g) {
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t out_plane = g.out_h * g.out_w;
  for (std::size_t ci = 0; ci < in_ch; ++ci) {
    T* dst = in + ci * in_plane;
    for (std::size_t co = 0; co < out_ch; ++co) {
      const T* src = out + co * out_plane;
      const T* w = weights + co * w_stride_out + ci * w_stride_in;
      for (std::size_t ky = 0; ky < kKernelSize; ++ky) {
        std::size_t y_lo, y_hi;
        ConvGeometry::valid_range(ky, g.in_h, g.out_h, g.stride, y_lo, y_hi);
        for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
          std::size_t x_lo, x_hi;
          ConvGeometry::valid_range(kx, g.in_w, g.out_w, g.stride, x_lo, x_hi);
          const T wv = w[ky * kKernelSize + kx];
          for (std::size_t oy = y_lo; oy < y_hi; ++oy) {
            T* row = dst + (oy * g.stride + ky - kPadding) * g.in_w;
            const T* srow = src + oy * g.out_w;
            if (g.stride == 1) {
              T* r = row + kx - kPadding;
              for (std::size_t ox = x_lo; ox < x_hi; ++ox) {
                r[ox] += wv * srow[ox];
              }
            } else {
              for (std::size_t ox = x_lo; ox < x_hi; ++ox) {
                row[ox * g.stride + kx - kPadding] += wv * srow[ox];
              }
            }
          }
        }
      }
    }
  }
}

// dW[a, b] += in[n, b] (*) out[n, a] (the weight gradient of correlate).
template <typename T>
void correlate_weight_grad(const T* in, std::size_t in_ch, const T* out,
                           std::size_t out_ch, T* grad_w,
                           std::size_t w_stride_out, std::size_t w_stride_in,
                           const ConvGeometry& g) {
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t out_plane = g.out_h * g.out_w;
  for (std::size_t co = 0; co < out_ch; ++co) {
    const T* go = out + co * out_plane;
    for (std::size_t ci = 0; ci < in_ch; ++ci) {
      const T* src = in + ci * in_plane;
      T* gw = grad_w + co * w_stride_out + ci * w_stride_in;
      for (std::size_t ky = 0; ky < kKernelSize; ++ky) {
        std::size_t y_lo, y_hi;
        ConvGeometry::valid_range(ky, g.in_h, g.out_h, g.stride, y_lo, y_hi);
        for (std::size_t kx = 0; kx < kKernelSize; ++kx) {
          std::size_t x_lo, x_hi;
          ConvGeometry::valid_range(kx, g.in_w, g.out_w, g.stride, x_lo, x_hi);
          T acc{0};
          for (std::size_t oy = y_lo; oy < y_hi; ++oy) {
            const T* row = src + (oy * g.stride + ky - kPadding) * g.in_w;
            const T* grow = go + oy * g.out_w;
            for (std::size_t ox = x_lo; ox < x_hi; ++ox) {
              acc += grow[ox] * row[ox * g.stride + kx - kPadding];
            }
          }
          gw[ky * kKernelSize + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void add_bias(Tensor<T>& out, const Tensor<T>& bias) {
  const std::size_t batch = out.extent(0), channels = out.extent(1);
  const std::size_t plane = out.extent(2) * out.extent(3);
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      T* p = out.data() + (n * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] = bias[c];
    }
  }
}

template <typename T>
Tensor<T> bias_grad(const Tensor<T>& grad_output) {
  const std::size_t batch = grad_output.extent(0);
  const std::size_t channels = grad_output.extent(1);
  const std::size_t plane = grad_output.extent(2) * grad_output.extent(3);
  Tensor<T> grad({channels});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < channels; ++c) {
      const T* p = grad_output.data() + (n * channels + c) * plane;
      T acc{0};
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      grad[c] += acc;
    }
  }
  return grad;
}

template <typename T>
void require_rank4(const Tensor<T>& t, const char* what) {
  if (t.rank() != 4) {
    throw Error(ErrorKind::kShapeMismatch,
                std::string(what) + " must be (B, C, H, W), got " +
                    shape_string(t.shape()));
  }
}

}  // namespace detail

// Cross-correlation with zero padding 1, plus per-channel bias.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const ConvLayerParams<T>& params) {
  detail::require_rank4(input, "conv2d input");
  detail::validate_kernels(params.kernels);
  detail::validate_stride(params.stride);
  const std::size_t out_ch = params.kernels.extent(0);
  const std::size_t in_ch = params.kernels.extent(1);
  if (input.extent(1) != in_ch) {
    throw Error(ErrorKind::kShapeMismatch,
                "conv2d input has " + std::to_string(input.extent(1)) +
                    " channels, kernels expect " + std::to_string(in_ch));
  }
  detail::validate_vector(params.bias, out_ch, "conv2d bias");
  const detail::ConvGeometry g{
      input.extent(2), input.extent(3),
      conv_output_extent(input.extent(2), params.stride),
      conv_output_extent(input.extent(3), params.stride), params.stride};
  const std::size_t batch = input.extent(0);
  Tensor<T> out({batch, out_ch, g.out_h, g.out_w});
  detail::add_bias(out, params.bias);
  for (std::size_t n = 0; n < batch; ++n) {
    detail::correlate(input.data() + n * in_ch * g.in_h * g.in_w, in_ch,
                      params.kernels.data(), in_ch * 9, std::size_t{9},
                      out.data() + n * out_ch * g.out_h * g.out_w, out_ch, g);
  }
  return out;
}

template <typename T>
ConvGradients<T> conv2d_backward(const Tensor<T>& input,
                                 const ConvLayerParams<T>& params,
                                 const Tensor<T>& grad_output) {
  detail::require_rank4(input, "conv2d_backward input");
  detail::validate_kernels(params.kernels);
  detail::validate_stride(params.stride);
  const std::size_t out_ch = params.kernels.extent(0);
  const std::size_t in_ch = params.kernels.extent(1);
  const std::size_t batch = input.extent(0);
  const detail::ConvGeometry g{
      input.extent(2), input.extent(3),
      conv_output_extent(input.extent(2), params.stride),
      conv_output_extent(input.extent(3), params.stride), params.stride};
  if (input.extent(1) != in_ch ||
      grad_output.shape() != Shape{batch, out_ch, g.out_h, g.out_w}) {
    throw Error(ErrorKind::kShapeMismatch,
                "conv2d_backward: input " + shape_string(input.shape()) +
                    ", grad_output " + shape_string(grad_output.shape()) +
                    ", kernels " + shape_string(params.kernels.shape()));
  }
  ConvGradients<T> grads{Tensor<T>(input.shape()),
                         Tensor<T>(params.kernels.shape()),
                         detail::bias_grad(grad_output)};
  for (std::size_t n = 0; n < batch; ++n) {
    const T* go = grad_output.data() + n * out_ch * g.out_h * g.out_w;
    detail::correlate_adjoint(go, out_ch, params.kernels.data(), in_ch * 9,
                              std::size_t{9},
                              grads.input.data() + n * in_ch * g.in_h * g.in_w,
                              in_ch, g);
    detail::correlate_weight_grad(input.data() + n * in_ch * g.in_h * g.in_w,
                                  in_ch, go, out_ch, grads.kernels.data(),
                                  in_ch * 9, std::size_t{9}, g);
  }
  return grads;
}

// Adjoint of conv2d with the same kernel tensor, plus per-channel bias.
// Output extent is input extent times stride.
template <typename T>
Tensor<T> transposed_conv2d(const Tensor<T>& input,
                            const ConvLayerParams<T>& params) {
  detail::require_rank4(input, "transposed_conv2d input");
  detail::validate_kernels(params.kernels);
  detail::validate_stride(params.stride);
  const std::size_t in_ch = params.kernels.extent(0);
  const std::size_t out_ch = params.kernels.extent(1);
  if (input.extent(1) != in_ch) {
    throw Error(ErrorKind::kShapeMismatch,
                "transposed_conv2d input has " +
                    std::to_string(input.extent(1)) +
                    " channels, kernels expect " + std::to_string(in_ch));
  }
  detail::validate_vector(params.bias, out_ch, "transposed_conv2d bias");
  // The forward geometry runs from the (larger) output back to the input.
  const detail::ConvGeometry g{
      transposed_output_extent(input.extent(2), params.stride),
      transposed_output_extent(input.extent(3), params.stride),
      input.extent(2), input.extent(3), params.stride};
  const std::size_t batch = input.extent(0);
  Tensor<T> out({batch, out_ch, g.in_h, g.in_w});
  detail::add_bias(out, params.bias);
  for (std::size_t n = 0; n < batch; ++n) {
    detail::correlate_adjoint(input.data() + n * in_ch * g.out_h * g.out_w,
                              in_ch, params.kernels.data(), out_ch * 9,
                              std::size_t{9},
                              out.data() + n * out_ch * g.in_h * g.in_w,
                              out_ch, g);
  }
  return out;
}

template <typename T>
ConvGradients<T> transposed_conv2d_backward(const Tensor<T>& input,
                                            const ConvLayerParams<T>& params,
                                            const Tensor<T>& grad_output) {
  detail::require_rank4(input, "transposed_conv2d_backward input");
  detail::validate_kernels(params.kernels);
  detail::validate_stride(params.stride);
  const std::size_t in_ch = params.kernels.extent(0);
  const std::size_t out_ch = params.kernels.extent(1);
  const std::size_t batch = input.extent(0);
  const detail::ConvGeometry g{
      transposed_output_extent(input.extent(2), params.stride),
      transposed_output_extent(input.extent(3), params.stride),
      input.extent(2), input.extent(3), params.stride};
  if (input.extent(1) != in_ch ||
      grad_output.shape() != Shape{batch, out_ch, g.in_h, g.in_w}) {
    throw Error(ErrorKind::kShapeMismatch,
                "transposed_conv2d_backward: input " +
                    shape_string(input.shape()) + ", grad_output " +
                    shape_string(grad_output.shape()) + ", kernels " +
                    shape_string(params.kernels.shape()));
  }
  ConvGradients<T> grads{Tensor<T>(input.shape()),
                         Tensor<T>(params.kernels.shape()),
                         detail::bias_grad(grad_output)};
  for (std::size_t n = 0; n < batch; ++n) {
    const T* go = grad_output.data() + n * out_ch * g.in_h * g.in_w;
    const T* in = input.data() + n * in_ch * g.out_h * g.out_w;
    detail::correlate(go, out_ch, params.kernels.data(), out_ch * 9,
                      std::size_t{9},
                      grads.input.data() + n * in_ch * g.out_h * g.out_w,
                      in_ch, g);
    detail::correlate_weight_grad(go, out_ch, in, in_ch, grads.kernels.data(),
                                  out_ch * 9, std::size_t{9}, g);
  }
  return grads;
}

namespace detail {

template <typename T>
void validate_prelu(const Tensor<T>& input, const Tensor<T>& slope) {
  if (input.rank() < 2) {
    throw Error(ErrorKind::kShapeMismatch,
                "prelu input needs a channel axis, got " +
                    shape_string(input.shape()));
  }
  validate_vector(slope, input.extent(1), "prelu slope");
}

}  // namespace detail

// Channel axis is axis 1.
template <typename T>
Tensor<T> prelu(const Tensor<T>& input, const Tensor<T>& slope) {
  detail::validate_prelu(input, slope);
  const std::size_t channels = input.extent(1);
  const std::size_t inner = input.size() / (input.extent(0) * channels);
  Tensor<T> out = input;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T a = slope[(i / inner) % channels];
    if (out[i] < T{0}) out[i] *= a;
  }
  return out;
}

template <typename T>
PreluGradients<T> prelu_backward(const Tensor<T>& input,
                                 const Tensor<T>& slope,
                                 const Tensor<T>& grad_output) {
  detail::validate_prelu(input, slope);
  input.require_same_shape(grad_output, "prelu_backward");
  const std::size_t channels = input.extent(1);
  const std::size_t inner = input.size() / (input.extent(0) * channels);
  PreluGradients<T> grads{Tensor<T>(input.shape()), Tensor<T>({channels})};
  for (std::size_t i = 0; i < input.size(); ++i) {
    const std::size_t c = (i / inner) % channels;
    if (input[i] >= T{0}) {
      grads.input[i] = grad_output[i];
    } else {
      grads.input[i] = grad_output[i] * slope[c];
      grads.slope[c] += grad_output[i] * input[i];
    }
  }
  return grads;
}

template <typename T>
struct AdamState {
  Tensor<T> first_moment;
  Tensor<T> second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros_like(const Tensor<T>& params,
                              double learning_rate = 1e-4) {
    AdamState state;
    state.first_moment = Tensor<T>(params.shape());
    state.second_moment = Tensor<T>(params.shape());
    state.learning_rate = learning_rate;
    return state;
  }
};

// Bias-corrected Adam update in place. Rejects non-finite gradients before
// touching either the parameters or the optimizer state.
template <typename T>
void adam_step(Tensor<T>& params, const Tensor<T>& grads,
               AdamState<T>& state, std::string_view name = "parameter") {
  params.require_same_shape(grads, "adam_step");
  params.require_same_shape(state.first_moment, "adam_step moments");
  params.require_same_shape(state.second_moment, "adam_step moments");
  if (!all_finite(grads)) {
    throw Error(ErrorKind::kNonFinite,
                "gradient of '" + std::string(name) + "' is not finite");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const T b1 = static_cast<T>(state.beta1);
  const T b2 = static_cast<T>(state.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    T& m = state.first_moment[i];
    T& v = state.second_moment[i];
    m = b1 * m + (T{1} - b1) * g;
    v = b2 * v + (T{1} - b2) * g * g;
    const double m_hat = static_cast<double>(m) / correction1;
    const double v_hat = static_cast<double>(v) / correction2;
    params[i] -= static_cast<T>(state.learning_rate * m_hat /
                                (std::sqrt(v_hat) + state.epsilon));
  }
}

}  // namespace cae

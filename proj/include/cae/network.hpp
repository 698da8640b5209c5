// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

// Symmetric convolutional autoencoder. The encoder is three downsampling
// units, each a stride-2 conv followed by a stride-1 conv (PReLU after every
// conv), taking a (B, 1, P, P) patch to (B, N6, P/8, P/8). The decoder mirrors
// it with transposed convolutions; its last layer is linear.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cae/error.hpp"
#include "cae/ops.hpp"
#include "cae/parallel.hpp"
#include "cae/rng.hpp"
#include "cae/tensor.hpp"

namespace cae {

struct CaeArchitecture {
  static constexpr std::size_t kLayers = 6;

  std::array<std::size_t, kLayers> filter_counts{32, 32, 64, 64, 64, 32};
  std::size_t patch_size = 128;

  std::size_t latent_channels() const { return filter_counts.back(); }
  std::size_t latent_extent() const { return patch_size / 8; }

  // Channels entering encoder layer i; channels(i + 1) leave it.
  std::size_t channels(std::size_t i) const {
    return i == 0 ? 1 : filter_counts[i - 1];
  }

  // Encoder layer i is stride 2 at the start of each unit.
  static std::size_t encoder_stride(std::size_t i) {
    return i % 2 == 0 ? 2 : 1;
  }

  void validate() const {
    if (patch_size < 8 || patch_size % 8 != 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "patch_size must be a positive multiple of 8, got " +
                      std::to_string(patch_size));
    }
    for (std::size_t n : filter_counts) {
      if (n == 0 || n > 255) {
        throw Error(ErrorKind::kInvalidArgument,
                    "filter counts must be in [1, 255]");
      }
    }
  }

  bool operator==(const CaeArchitecture&) const = default;
};

// Learnable parameters: encoder layers (theta) and decoder layers (phi).
// Decoder layer j mirrors encoder layer 5 - j and has the same kernel shape.
// The same structure carries gradients.
template <typename T>
struct CaeParams {
  CaeArchitecture architecture;
  std::array<ConvLayerParams<T>, CaeArchitecture::kLayers> encoder;
  std::array<ConvLayerParams<T>, CaeArchitecture::kLayers> decoder;

  static std::size_t mirror(std::size_t j) {
    return CaeArchitecture::kLayers - 1 - j;
  }

  // All tensors zero; strides and shapes set from the architecture.
  static CaeParams zeros(const CaeArchitecture& arch) {
    arch.validate();
    CaeParams p;
    p.architecture = arch;
    for (std::size_t i = 0; i < CaeArchitecture::kLayers; ++i) {
      const std::size_t in = arch.channels(i), out = arch.channels(i + 1);
      p.encoder[i] = ConvLayerParams<T>{Tensor<T>({out, in, 3, 3}),
                                        Tensor<T>({out}), Tensor<T>({out}),
                                        CaeArchitecture::encoder_stride(i)};
    }
    for (std::size_t j = 0; j < CaeArchitecture::kLayers; ++j) {
      const std::size_t i = mirror(j);
      const std::size_t in = arch.channels(i + 1), out = arch.channels(i);
      p.decoder[j] = ConvLayerParams<T>{Tensor<T>({in, out, 3, 3}),
                                        Tensor<T>({out}), Tensor<T>({out}),
                                        CaeArchitecture::encoder_stride(i)};
    }
    return p;
  }

  // He initialization: N(0, 2 / fan_in) kernels, zero bias, slopes 0.25.
  static CaeParams initialize(const CaeArchitecture& arch,
                              std::uint64_t seed) {
    CaeParams p = zeros(arch);
    Rng rng(seed);
    auto init_layer = [&](ConvLayerParams<T>& layer, std::size_t fan_in) {
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (T& w : layer.kernels.values()) w = static_cast<T>(stddev * rng.normal());
      layer.prelu_slope.fill(static_cast<T>(0.25));
    };
    for (std::size_t i = 0; i < CaeArchitecture::kLayers; ++i) {
      init_layer(p.encoder[i], arch.channels(i) * 9);
    }
    for (std::size_t j = 0; j < CaeArchitecture::kLayers; ++j) {
      init_layer(p.decoder[j], arch.channels(mirror(j) + 1) * 9);
    }
    return p;
  }

  // Visits every tensor with a stable name, encoder first.
  template <typename Fn>
  void for_each_tensor(Fn&& fn) {
    visit(*this, fn);
  }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const {
    visit(*this, fn);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, const Tensor<T>& t) { n += t.size(); });
    return n;
  }

  CaeParams& operator+=(const CaeParams& other) {
    for (std::size_t i = 0; i < CaeArchitecture::kLayers; ++i) {
      add_layer(encoder[i], other.encoder[i]);
      add_layer(decoder[i], other.decoder[i]);
    }
    return *this;
  }

 private:
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn& fn) {
    for (std::size_t i = 0; i < CaeArchitecture::kLayers; ++i) {
      const std::string prefix = "enc" + std::to_string(i);
      fn(prefix + ".kernels", self.encoder[i].kernels);
      fn(prefix + ".bias", self.encoder[i].bias);
      fn(prefix + ".prelu", self.encoder[i].prelu_slope);
    }
    for (std::size_t j = 0; j < CaeArchitecture::kLayers; ++j) {
      const std::string prefix = "dec" + std::to_string(j);
      fn(prefix + ".kernels", self.decoder[j].kernels);
      fn(prefix + ".bias", self.decoder[j].bias);
      fn(prefix + ".prelu", self.decoder[j].prelu_slope);
    }
  }

  static void add_layer(ConvLayerParams<T>& a, const ConvLayerParams<T>& b) {
    a.kernels += b.kernels;
    a.bias += b.bias;
    a.prelu_slope += b.prelu_slope;
  }
};

// Intermediate values kept for backpropagation. layer_input[k] feeds layer k;
// pre_activation[k] is the conv output before PReLU.
template <typename T>
struct StackTrace {
  std::array<Tensor<T>, CaeArchitecture::kLayers> layer_input;
  std::array<Tensor<T>, CaeArchitecture::kLayers> pre_activation;
  Tensor<T> output;
};

namespace detail {

inline bool decoder_layer_has_activation(std::size_t j) {
  return j + 1 < CaeArchitecture::kLayers;
}

template <typename T>
StackTrace<T> encode_trace(const CaeParams<T>& params, const Tensor<T>& patch) {
  const std::size_t p = params.architecture.patch_size;
  if (patch.rank() != 4 || patch.extent(1) != 1 || patch.extent(2) != p ||
      patch.extent(3) != p) {
    throw Error(ErrorKind::kShapeMismatch,
                "encoder expects (B, 1, " + std::to_string(p) + ", " +
                    std::to_string(p) + "), got " +
                    shape_string(patch.shape()));
  }
  StackTrace<T> trace;
  Tensor<T> x = patch;
  for (std::size_t i = 0; i < CaeArchitecture::kLayers; ++i) {
    trace.layer_input[i] = std::move(x);
    trace.pre_activation[i] = conv2d(trace.layer_input[i], params.encoder[i]);
    x = prelu(trace.pre_activation[i], params.encoder[i].prelu_slope);
  }
  trace.output = std::move(x);
  return trace;
}

template <typename T>
StackTrace<T> decode_trace(const CaeParams<T>& params,
                           const Tensor<T>& latent) {
  const CaeArchitecture& arch = params.architecture;
  const std::size_t e = arch.latent_extent();
  if (latent.rank() != 4 || latent.extent(1) != arch.latent_channels() ||
      latent.extent(2) != e || latent.extent(3) != e) {
    throw Error(ErrorKind::kShapeMismatch,
                "decoder expects (B, " +
                    std::to_string(arch.latent_channels()) + ", " +
                    std::to_string(e) + ", " + std::to_string(e) +
                    "), got " + shape_string(latent.shape()));
  }
  StackTrace<T> trace;
  Tensor<T> x = latent;
  for (std::size_t j = 0; j < CaeArchitecture::kLayers; ++j) {
    trace.layer_input[j] = std::move(x);
    trace.pre_activation[j] =
        transposed_conv2d(trace.layer_input[j], params.decoder[j]);
    x = decoder_layer_has_activation(j)
            ? prelu(trace.pre_activation[j], params.decoder[j].prelu_slope)
            : trace.pre_activation[j];
  }
  trace.output = std::move(x);
  return trace;
}

// Backpropagates grad_output through the encoder, accumulating into grads.
template <typename T>
void encode_backward(const CaeParams<T>& params, const StackTrace<T>& trace,
                     Tensor<T> grad_output, CaeParams<T>& grads) {
  for (std::size_t k = CaeArchitecture::kLayers; k-- > 0;) {
    PreluGradients<T> pg = prelu_backward(
        trace.pre_activation[k], params.encoder[k].prelu_slope, grad_output);
    grads.encoder[k].prelu_slope += pg.slope;
    ConvGradients<T> cg =
        conv2d_backward(trace.layer_input[k], params.encoder[k], pg.input);
    grads.encoder[k].kernels += cg.kernels;
    grads.encoder[k].bias += cg.bias;
    grad_output = std::move(cg.input);
  }
}

// Returns the gradient with respect to the decoder input.
template <typename T>
Tensor<T> decode_backward(const CaeParams<T>& params,
                          const StackTrace<T>& trace, Tensor<T> grad_output,
                          CaeParams<T>& grads) {
  for (std::size_t k = CaeArchitecture::kLayers; k-- > 0;) {
    Tensor<T> grad_pre;
    if (decoder_layer_has_activation(k)) {
      PreluGradients<T> pg = prelu_backward(
          trace.pre_activation[k], params.decoder[k].prelu_slope, grad_output);
      grads.decoder[k].prelu_slope += pg.slope;
      grad_pre = std::move(pg.input);
    } else {
      grad_pre = std::move(grad_output);
    }
    ConvGradients<T> cg = transposed_conv2d_backward(
        trace.layer_input[k], params.decoder[k], grad_pre);
    grads.decoder[k].kernels += cg.kernels;
    grads.decoder[k].bias += cg.bias;
    grad_output = std::move(cg.input);
  }
  return grad_output;
}

}  // namespace detail

// y = f_theta(x) for a batch of (B, 1, P, P) patches.
template <typename T>
Tensor<T> encode(const CaeParams<T>& params, const Tensor<T>& patch) {
  return detail::encode_trace(params, patch).output;
}

// x_hat = g_phi(y). Output is not clamped.
template <typename T>
Tensor<T> decode(const CaeParams<T>& params, const Tensor<T>& latent) {
  return detail::decode_trace(params, latent).output;
}

struct LossTerms {
  double total = 0.0;
  double distortion = 0.0;  // mean((x - x_hat)^2)
  double rate = 0.0;        // mean(y^2), before lambda
};

template <typename T>
struct LossResult {
  LossTerms terms;
  CaeParams<T> gradients;
};

// i.i.d. uniform noise on [-halfwidth, +halfwidth].
template <typename T>
Tensor<T> uniform_noise(const Shape& shape, double halfwidth, Rng& rng) {
  Tensor<T> noise(shape);
  for (T& v : noise.values()) {
    v = static_cast<T>(rng.uniform(-halfwidth, halfwidth));
  }
  return noise;
}

// J = mean((x - g(f(x) + noise))^2) + lambda * mean(f(x)^2) and its exact
// gradient with respect to every parameter. Batch items are evaluated
// independently (in parallel when threads > 1) and reduced in batch order,
// so the result does not depend on the thread count.
template <typename T>
LossResult<T> loss_and_gradients(const CaeParams<T>& params,
                                 const Tensor<T>& batch,
                                 const Tensor<T>& noise, double lambda,
                                 std::size_t threads = 0) {
  const CaeArchitecture& arch = params.architecture;
  const std::size_t count = batch.rank() == 4 ? batch.extent(0) : 0;
  const Shape latent_shape{count, arch.latent_channels(), arch.latent_extent(),
                           arch.latent_extent()};
  if (count == 0 || noise.shape() != latent_shape) {
    throw Error(ErrorKind::kShapeMismatch,
                "noise " + shape_string(noise.shape()) +
                    " does not match latent " + shape_string(latent_shape));
  }
  const T x_norm = static_cast<T>(batch.size());
  const T y_norm = static_cast<T>(noise.size());

  struct Item {
    double distortion_sum = 0.0;
    double rate_sum = 0.0;
    CaeParams<T> grads;
  };
  std::vector<Item> items(count);
  parallel_for(
      count,
      [&](std::size_t n) {
        Item& item = items[n];
        item.grads = CaeParams<T>::zeros(arch);
        const Tensor<T> x = batch.slice_batch(n, 1);
        StackTrace<T> enc = detail::encode_trace(params, x);
        Tensor<T> z = enc.output;
        z += noise.slice_batch(n, 1);
        StackTrace<T> dec = detail::decode_trace(params, z);

        Tensor<T> grad_xhat(x.shape());
        for (std::size_t i = 0; i < x.size(); ++i) {
          const T d = dec.output[i] - x[i];
          item.distortion_sum += static_cast<double>(d) * d;
          grad_xhat[i] = T{2} * d / x_norm;
        }
        Tensor<T> grad_y =
            detail::decode_backward(params, dec, std::move(grad_xhat),
                                    item.grads);
        const T rate_scale = static_cast<T>(2.0 * lambda) / y_norm;
        for (std::size_t i = 0; i < grad_y.size(); ++i) {
          const T y = enc.output[i];
          item.rate_sum += static_cast<double>(y) * y;
          grad_y[i] += rate_scale * y;
        }
        detail::encode_backward(params, enc, std::move(grad_y), item.grads);
      },
      threads);

  LossResult<T> result{{}, CaeParams<T>::zeros(arch)};
  double distortion_sum = 0.0, rate_sum = 0.0;
  for (Item& item : items) {
    distortion_sum += item.distortion_sum;
    rate_sum += item.rate_sum;
    result.gradients += item.grads;
  }
  result.terms.distortion = distortion_sum / static_cast<double>(x_norm);
  result.terms.rate = rate_sum / static_cast<double>(y_norm);
  result.terms.total =
      result.terms.distortion + lambda * result.terms.rate;
  return result;
}

// Loss value only, with explicit noise.
template <typename T>
LossTerms loss_value(const CaeParams<T>& params, const Tensor<T>& batch,
                     const Tensor<T>& noise, double lambda) {
  const Tensor<T> y = encode(params, batch);
  Tensor<T> z = y;
  z += noise;
  const Tensor<T> x_hat = decode(params, z);
  LossTerms terms;
  double d_sum = 0.0, r_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = static_cast<double>(x_hat[i]) - batch[i];
    d_sum += d * d;
  }
  for (T v : y.values()) r_sum += static_cast<double>(v) * v;
  terms.distortion = d_sum / static_cast<double>(batch.size());
  terms.rate = r_sum / static_cast<double>(y.size());
  terms.total = terms.distortion + lambda * terms.rate;
  return terms;
}

}  // namespace cae

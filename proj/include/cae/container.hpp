// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cae/bitplane_codec.hpp"
#include "cae/bytes.hpp"
#include "cae/checkpoint.hpp"
#include "cae/color.hpp"
#include "cae/network.hpp"
#include "cae/parallel.hpp"
#include "cae/patches.hpp"
#include "cae/pca.hpp"
#include "cae/quantizer.hpp"

// CAEC container, little-endian:
//
//   "CAEC" | u8 version | u16 width | u16 height | u16 patch_size | u8 B |
//   u8 N6 | u8 plane_count | u64 model_id
//   then for each of Y, Cb, Cr: rotation block, coded plane.
//
// A coded plane holds the N6 rotated latent maps of the whole image, tiled in
// vertical-scan order and quantized with precision B.
namespace cae {

inline constexpr std::array<std::uint8_t, 4> kContainerMagic{'C', 'A', 'E', 'C'};
inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 22;
inline constexpr std::size_t kPlaneCount = 3;
inline constexpr int kRotationBits = 16;
inline constexpr std::array<std::uint64_t, kPlaneCount> kPlaneRateWeights{6, 1, 1};  // /8

struct ContainerHeader {
  std::uint8_t version = kContainerVersion;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::uint16_t patch_size = 0;
  std::uint8_t precision_bits = kDefaultPrecisionBits;
  std::uint8_t latent_channels = 0;
  std::uint8_t plane_count = kPlaneCount;
  std::uint64_t model_id = 0;

  bool operator==(const ContainerHeader&) const = default;
};

// Total file budget. Unset means every plane is coded to full precision.
struct ImageRate {
  std::optional<std::uint64_t> total_bits;

  static ImageRate lossless() { return {}; }
  static ImageRate bits(std::uint64_t n) { return {n}; }
  static ImageRate bpp(double bits_per_pixel, std::size_t width, std::size_t height) {
    if (!(bits_per_pixel > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "target bpp must be positive");
    }
    return {static_cast<std::uint64_t>(bits_per_pixel * static_cast<double>(width * height))};
  }
};

struct EncodedImage {
  Bytes bytes;
  ContainerHeader header;
  std::array<std::uint64_t, kPlaneCount> plane_bits{};  // rotation block + coded plane
  std::array<int, kPlaneCount> transmitted_bitplanes{};
  std::array<int, kPlaneCount> num_bitplanes{};

  double bpp() const {
    return static_cast<double>(bytes.size() * 8) /
           static_cast<double>(std::size_t{header.width} * header.height);
  }
};

struct DecodedImage {
  RgbImage rgb;
  ContainerHeader header;
  bool model_mismatch = false;
};

namespace detail {

struct LatentLayout {
  std::size_t channels, latent_rows, latent_cols, patch_rows, patch_cols;

  std::size_t map_rows() const { return patch_rows * latent_rows; }
  std::size_t map_cols() const { return patch_cols * latent_cols; }
  std::pair<std::size_t, std::size_t> tiled_dims() const {
    const TileLayout t = tile_layout(channels);
    return {t.rows * map_rows(), t.cols * map_cols()};
  }
};

template <typename T>
LatentLayout latent_layout(const CaeParams<T>& params, std::size_t height, std::size_t width) {
  const std::size_t p = params.architecture.patch_size;
  const std::size_t e = params.architecture.latent_extent();
  return {params.architecture.latent_channels(), e, e, padded_extent(height, p) / p,
          padded_extent(width, p) / p};
}

template <typename T>
std::vector<Tensor<T>> encode_patches(const CaeParams<T>& params, const PatchGrid& grid) {
  std::vector<Tensor<T>> latents(grid.patches.size());
  parallel_for(grid.patches.size(), [&](std::size_t i) {
    const Plane& patch = grid.patches[i];
    Tensor<T> x({1, 1, patch.rows, patch.cols});
    for (std::size_t k = 0; k < patch.size(); ++k) x[k] = static_cast<T>(patch.values[k]);
    latents[i] = encode(params, x);
  });
  return latents;
}

template <typename T>
std::vector<Plane> decode_patches(const CaeParams<T>& params,
                                  const std::vector<Tensor<T>>& latents) {
  std::vector<Plane> patches(latents.size());
  parallel_for(latents.size(), [&](std::size_t i) {
    const Tensor<T> x = decode(params, latents[i]);
    Plane p(x.extent(2), x.extent(3));
    for (std::size_t k = 0; k < p.size(); ++k) p.values[k] = static_cast<double>(x[k]);
    patches[i] = std::move(p);
  });
  return patches;
}

// One row per latent position of the whole image (raster order), one column
// per channel.
template <typename T>
pca::Matrix gather_samples(const std::vector<Tensor<T>>& latents, const LatentLayout& l) {
  pca::Matrix samples(l.map_rows() * l.map_cols(), l.channels);
  for (std::size_t pr = 0; pr < l.patch_rows; ++pr) {
    for (std::size_t pc = 0; pc < l.patch_cols; ++pc) {
      const Tensor<T>& z = latents[pr * l.patch_cols + pc];
      for (std::size_t k = 0; k < l.channels; ++k) {
        for (std::size_t y = 0; y < l.latent_rows; ++y) {
          for (std::size_t x = 0; x < l.latent_cols; ++x) {
            const std::size_t row = (pr * l.latent_rows + y) * l.map_cols() +
                                    pc * l.latent_cols + x;
            samples(row, k) = static_cast<double>(z(0, k, y, x));
          }
        }
      }
    }
  }
  return samples;
}

template <typename T>
std::vector<Tensor<T>> scatter_samples(const pca::Matrix& samples, const LatentLayout& l) {
  std::vector<Tensor<T>> latents;
  for (std::size_t pr = 0; pr < l.patch_rows; ++pr) {
    for (std::size_t pc = 0; pc < l.patch_cols; ++pc) {
      Tensor<T> z({1, l.channels, l.latent_rows, l.latent_cols});
      for (std::size_t k = 0; k < l.channels; ++k) {
        for (std::size_t y = 0; y < l.latent_rows; ++y) {
          for (std::size_t x = 0; x < l.latent_cols; ++x) {
            const std::size_t row = (pr * l.latent_rows + y) * l.map_cols() +
                                    pc * l.latent_cols + x;
            z(0, k, y, x) = static_cast<T>(samples(row, k));
          }
        }
      }
      latents.push_back(std::move(z));
    }
  }
  return latents;
}

inline Plane tile_samples(const pca::Matrix& samples, const LatentLayout& l) {
  std::vector<Plane> maps(l.channels, Plane(l.map_rows(), l.map_cols()));
  for (std::size_t s = 0; s < samples.rows; ++s) {
    for (std::size_t k = 0; k < l.channels; ++k) maps[k].values[s] = samples(s, k);
  }
  return tile_vertical_scan(maps);
}

inline pca::Matrix untile_samples(const Plane& tiled, const LatentLayout& l) {
  const auto maps = untile_vertical_scan(tiled, l.channels, l.map_rows(), l.map_cols());
  pca::Matrix samples(l.map_rows() * l.map_cols(), l.channels);
  for (std::size_t s = 0; s < samples.rows; ++s) {
    for (std::size_t k = 0; k < l.channels; ++k) samples(s, k) = maps[k].values[s];
  }
  return samples;
}

inline void write_header(ByteWriter& w, const ContainerHeader& h) {
  w.bytes(kContainerMagic);
  w.u8(h.version);
  w.u16(h.width);
  w.u16(h.height);
  w.u16(h.patch_size);
  w.u8(h.precision_bits);
  w.u8(h.latent_channels);
  w.u8(h.plane_count);
  w.u64(h.model_id);
}

inline ContainerHeader read_header(ByteReader& r) {
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), kContainerMagic.begin())) r.fail("bad magic");
  ContainerHeader h;
  h.version = r.u8();
  if (h.version != kContainerVersion) {
    throw Error(ErrorKind::kUnsupportedVersion,
                "container version " + std::to_string(h.version) +
                    " is not supported (this decoder reads version " +
                    std::to_string(kContainerVersion) + ")");
  }
  h.width = r.u16();
  h.height = r.u16();
  h.patch_size = r.u16();
  h.precision_bits = r.u8();
  h.latent_channels = r.u8();
  h.plane_count = r.u8();
  h.model_id = r.u64();
  if (h.width == 0 || h.height == 0) r.fail("zero image extent");
  if (h.plane_count != kPlaneCount) r.fail("plane count must be 3");
  if (h.precision_bits < 1 || h.precision_bits > kMaxBitplanes) r.fail("bad precision");
  return h;
}

}  // namespace detail

inline const char* plane_name(std::size_t c) {
  static constexpr const char* kNames[kPlaneCount] = {"Y", "Cb", "Cr"};
  return kNames[c];
}

// Per-plane targets from a file budget: what is left after the container
// header and the three rotation blocks, split 6:1:1.
inline std::array<RateTarget, kPlaneCount> split_rate(const ImageRate& rate,
                                                      std::size_t latent_channels) {
  std::array<RateTarget, kPlaneCount> out;
  if (!rate.total_bits) return out;
  const std::uint64_t overhead = 8 * kContainerHeaderBytes +
                                 kPlaneCount * pca::rotation_block_bits(latent_channels,
                                                                        kRotationBits);
  const std::uint64_t available =
      *rate.total_bits > overhead ? *rate.total_bits - overhead : 0;
  for (std::size_t c = 0; c < kPlaneCount; ++c) {
    const std::uint64_t share = available * kPlaneRateWeights[c] / 8;
    if (share < 8 * kPlaneHeaderBytes) {
      throw Error(ErrorKind::kRateTooSmall,
                  "rate of " + std::to_string(*rate.total_bits) + " bits leaves " +
                      std::to_string(share) + " bits for the " + plane_name(c) +
                      " plane after headers and rotation side information");
    }
    out[c] = RateTarget::bits(share);
  }
  return out;
}

template <typename T>
EncodedImage encode_image(const RgbImage& image, const CaeParams<T>& params,
                          const ImageRate& rate = ImageRate::lossless(),
                          int precision_bits = kDefaultPrecisionBits) {
  image.require_consistent();
  if (image.width() > 0xFFFF || image.height() > 0xFFFF) {
    throw Error(ErrorKind::kInvalidArgument, "image extent exceeds 65535");
  }
  if (precision_bits < 1 || precision_bits > 24) {
    throw Error(ErrorKind::kInvalidArgument, "precision must be in 1..24");
  }
  const CaeArchitecture& arch = params.architecture;
  EncodedImage out;
  out.header.width = static_cast<std::uint16_t>(image.width());
  out.header.height = static_cast<std::uint16_t>(image.height());
  out.header.patch_size = static_cast<std::uint16_t>(arch.patch_size);
  out.header.precision_bits = static_cast<std::uint8_t>(precision_bits);
  out.header.latent_channels = static_cast<std::uint8_t>(arch.latent_channels());
  out.header.model_id = model_id(params);
  const auto targets = split_rate(rate, arch.latent_channels());

  ByteWriter w;
  detail::write_header(w, out.header);
  const PlanarImage ycc = rgb_to_ycbcr(image);
  const auto layout = detail::latent_layout(params, image.height(), image.width());
  for (std::size_t c = 0; c < kPlaneCount; ++c) {
    const std::size_t start = w.size();
    const auto latents = detail::encode_patches(params, split_patches(ycc[c], arch.patch_size));
    const pca::Matrix samples = detail::gather_samples(latents, layout);
    const auto rotation = pca::eigendecompose(pca::compute_covariance(samples));
    const auto q_rotation = pca::quantize_rotation(rotation.u, kRotationBits);
    pca::write_rotation(w, q_rotation);
    const pca::Matrix rotated = pca::rotate(samples, pca::dequantize_rotation(q_rotation));
    const QuantizedPlane q = quantize(detail::tile_samples(rotated, layout), precision_bits);
    const Bytes coded = encode_plane(q, targets[c]);
    w.bytes(coded);
    out.num_bitplanes[c] = q.num_bitplanes();
    ByteReader check(coded, "plane");
    out.transmitted_bitplanes[c] = decode_plane(check, precision_bits).transmitted_bitplanes;
    out.plane_bits[c] = 8 * (w.size() - start);
  }
  out.bytes = w.take();
  return out;
}

template <typename T>
DecodedImage decode_image(std::span<const std::uint8_t> bytes, const CaeParams<T>& params) {
  ByteReader r(bytes, "container header");
  DecodedImage out;
  out.header = detail::read_header(r);
  const ContainerHeader& h = out.header;
  const CaeArchitecture& arch = params.architecture;
  if (h.patch_size != arch.patch_size || h.latent_channels != arch.latent_channels()) {
    throw Error(ErrorKind::kInvalidArgument,
                "model does not match the container (patch " + std::to_string(h.patch_size) +
                    ", " + std::to_string(h.latent_channels) + " latent channels)");
  }
  out.model_mismatch = h.model_id != model_id(params);
  const auto layout = detail::latent_layout(params, h.height, h.width);

  PlanarImage ycc(h.height, h.width);
  for (std::size_t c = 0; c < kPlaneCount; ++c) {
    r.set_section(std::string(plane_name(c)) + " rotation block");
    const pca::Matrix u = pca::dequantize_rotation(pca::read_rotation(r, h.latent_channels));
    r.set_section(std::string(plane_name(c)) + " coded plane");
    const DecodedPlane coded = decode_plane(r, h.precision_bits, layout.tiled_dims());
    const pca::Matrix rotated = detail::untile_samples(dequantize(coded.plane), layout);
    const auto latents = detail::scatter_samples<T>(pca::inverse_rotate(rotated, u), layout);
    PatchGrid grid = split_patches(Plane(h.height, h.width), arch.patch_size);
    grid.patches = detail::decode_patches(params, latents);
    ycc[c] = merge_patches(grid);
  }
  r.set_section("container trailer");
  if (r.remaining() != 0) r.fail("trailing bytes after the last plane");
  out.rgb = ycbcr_to_rgb(ycc);
  return out;
}

// The network's own reconstruction without PCA, quantization or coding.
template <typename T>
RgbImage cae_reconstruct(const RgbImage& image, const CaeParams<T>& params) {
  const PlanarImage ycc = rgb_to_ycbcr(image);
  PlanarImage rec(image.height(), image.width());
  for (std::size_t c = 0; c < kPlaneCount; ++c) {
    PatchGrid grid = split_patches(ycc[c], params.architecture.patch_size);
    grid.patches = detail::decode_patches(params, detail::encode_patches(params, grid));
    rec[c] = merge_patches(grid);
  }
  return ycbcr_to_rgb(rec);
}

}  // namespace cae

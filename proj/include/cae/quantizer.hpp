// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

// Fixed-point quantization of rotated latents, y' = round(2^(B-1) * y_rot),
// and the vertical-scan tiling of feature maps into one coefficient plane.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cae/grid.hpp"

namespace cae {

inline constexpr int kDefaultPrecisionBits = 12;
inline constexpr int kMaxBitplanes = 30;

struct QuantizedPlane {
  Grid<std::int32_t> coefficients;
  int precision_bits = kDefaultPrecisionBits;

  // Smallest n with max |coefficient| < 2^n.
  int num_bitplanes() const {
    std::uint32_t max_mag = 0;
    for (std::int32_t v : coefficients.values) {
      max_mag = std::max(max_mag, static_cast<std::uint32_t>(v < 0 ? -static_cast<std::int64_t>(v) : v));
    }
    return static_cast<int>(std::bit_width(max_mag));
  }

  bool operator==(const QuantizedPlane&) const = default;
};

// Round half away from zero.
inline double round_half_away(double v) { return std::round(v); }

inline QuantizedPlane quantize(const Plane& values,
                               int precision_bits = kDefaultPrecisionBits) {
  if (precision_bits < 1 || precision_bits > 24) {
    throw Error(ErrorKind::kInvalidArgument, "precision B must be in [1, 24]");
  }
  const double scale = std::ldexp(1.0, precision_bits - 1);
  const double limit = std::ldexp(1.0, kMaxBitplanes);
  QuantizedPlane out{Grid<std::int32_t>(values.rows, values.cols), precision_bits};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double q = round_half_away(scale * values.values[i]);
    if (!std::isfinite(q) || std::abs(q) >= limit) {
      throw Error(ErrorKind::kInvalidArgument,
                  "value " + std::to_string(values.values[i]) +
                      " exceeds the coefficient range");
    }
    out.coefficients.values[i] = static_cast<std::int32_t>(q);
  }
  return out;
}

inline Plane dequantize(const QuantizedPlane& plane) {
  const double scale = std::ldexp(1.0, -(plane.precision_bits - 1));
  Plane out(plane.coefficients.rows, plane.coefficients.cols);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = plane.coefficients.values[i] * scale;
  }
  return out;
}

// Tile grid for N maps: the widest power-of-two column count whose square
// does not exceed N, and as many rows as needed.
struct TileLayout {
  std::size_t cols = 1;
  std::size_t rows = 1;
};

inline TileLayout tile_layout(std::size_t maps) {
  if (maps == 0) throw Error(ErrorKind::kInvalidArgument, "no feature maps");
  TileLayout layout;
  while ((layout.cols * 2) * (layout.cols * 2) <= maps) layout.cols *= 2;
  layout.rows = (maps + layout.cols - 1) / layout.cols;
  return layout;
}

// Places maps column-major: map k goes to tile (k % rows, k / rows), so the
// first (highest-energy) maps fill the left column top to bottom. Unused
// tiles are zero.
template <typename T>
Grid<T> tile_vertical_scan(const std::vector<Grid<T>>& maps) {
  const TileLayout layout = tile_layout(maps.size());
  const std::size_t h = maps.front().rows, w = maps.front().cols;
  for (const auto& m : maps) {
    if (m.rows != h || m.cols != w) {
      throw Error(ErrorKind::kShapeMismatch, "feature maps differ in size");
    }
  }
  Grid<T> out(layout.rows * h, layout.cols * w);
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const std::size_t r0 = (k % layout.rows) * h, c0 = (k / layout.rows) * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out(r0 + y, c0 + x) = maps[k](y, x);
  }
  return out;
}

template <typename T>
std::vector<Grid<T>> untile_vertical_scan(const Grid<T>& tiled,
                                          std::size_t maps, std::size_t h,
                                          std::size_t w) {
  const TileLayout layout = tile_layout(maps);
  if (tiled.rows != layout.rows * h || tiled.cols != layout.cols * w) {
    throw Error(ErrorKind::kShapeMismatch,
                "tiled plane " + std::to_string(tiled.rows) + "x" +
                    std::to_string(tiled.cols) + " does not hold " +
                    std::to_string(maps) + " maps of " + std::to_string(h) +
                    "x" + std::to_string(w));
  }
  std::vector<Grid<T>> out(maps, Grid<T>(h, w));
  for (std::size_t k = 0; k < maps; ++k) {
    const std::size_t r0 = (k % layout.rows) * h, c0 = (k / layout.rows) * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out[k](y, x) = tiled(r0 + y, c0 + x);
  }
  return out;
}

}  // namespace cae

// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>

#include "cae/grid.hpp"

namespace cae {

// Three planes of equal extent. Channel order is R, G, B for RgbImage and
// Y, Cb, Cr for PlanarImage; values are nominally in [0, 1].
struct ThreePlanes {
  std::array<Plane, 3> planes;

  ThreePlanes() = default;
  ThreePlanes(std::size_t height, std::size_t width)
      : planes{Plane(height, width), Plane(height, width), Plane(height, width)} {}

  std::size_t height() const { return planes[0].rows; }
  std::size_t width() const { return planes[0].cols; }
  std::size_t pixel_count() const { return planes[0].size(); }
  Plane& operator[](std::size_t c) { return planes[c]; }
  const Plane& operator[](std::size_t c) const { return planes[c]; }

  void require_consistent() const {
    for (const auto& p : planes) {
      if (!p.same_extent(planes[0]) || p.size() == 0) {
        throw Error(ErrorKind::kShapeMismatch, "image planes must share a nonzero extent");
      }
    }
  }

  bool operator==(const ThreePlanes&) const = default;
};

struct RgbImage : ThreePlanes {
  using ThreePlanes::ThreePlanes;
};

struct PlanarImage : ThreePlanes {
  using ThreePlanes::ThreePlanes;
};

inline double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

// Full-range BT.601.
inline std::array<double, 3> rgb_to_ycbcr(double r, double g, double b) {
  return {0.299 * r + 0.587 * g + 0.114 * b,
          0.5 - 0.168736 * r - 0.331264 * g + 0.5 * b,
          0.5 + 0.5 * r - 0.418688 * g - 0.081312 * b};
}

inline std::array<double, 3> ycbcr_to_rgb(double y, double cb, double cr) {
  cb -= 0.5;
  cr -= 0.5;
  return {y + 1.402 * cr, y - 0.344136 * cb - 0.714136 * cr, y + 1.772 * cb};
}

inline PlanarImage rgb_to_ycbcr(const RgbImage& rgb) {
  rgb.require_consistent();
  PlanarImage out(rgb.height(), rgb.width());
  for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
    const auto v = rgb_to_ycbcr(rgb[0].values[i], rgb[1].values[i], rgb[2].values[i]);
    for (std::size_t c = 0; c < 3; ++c) out[c].values[i] = clamp_unit(v[c]);
  }
  return out;
}

inline RgbImage ycbcr_to_rgb(const PlanarImage& ycc) {
  ycc.require_consistent();
  RgbImage out(ycc.height(), ycc.width());
  for (std::size_t i = 0; i < ycc.pixel_count(); ++i) {
    const auto v = ycbcr_to_rgb(ycc[0].values[i], ycc[1].values[i], ycc[2].values[i]);
    for (std::size_t c = 0; c < 3; ++c) out[c].values[i] = clamp_unit(v[c]);
  }
  return out;
}

}  // namespace cae

// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "cae/color.hpp"
#include "cae/rng.hpp"

namespace cae::test {

// Smooth color fields with shaded discs and mild grain.
inline RgbImage synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(height, width);
  double f[3][4];
  for (auto& row : f)
    for (double& v : row) v = rng.uniform(0.01, 0.08);
  struct Disc {
    double y, x, r, gain;
  };
  Disc discs[4];
  for (auto& d : discs) {
    d = {rng.uniform(0.0, static_cast<double>(height)), rng.uniform(0.0, static_cast<double>(width)),
         rng.uniform(8.0, 40.0), rng.uniform(0.4, 1.4)};
  }
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double y = static_cast<double>(r), x = static_cast<double>(c);
      double gain = 1.0;
      for (const auto& d : discs) {
        if ((y - d.y) * (y - d.y) + (x - d.x) * (x - d.x) < d.r * d.r) gain *= d.gain;
      }
      const double grain = 0.01 * rng.normal();
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double v = 0.5 + 0.22 * std::sin(f[ch][0] * x + f[ch][1] * y + ch) +
                         0.12 * std::cos(f[ch][2] * x - f[ch][3] * y);
        img[ch](r, c) = std::clamp(v * gain + grain, 0.0, 1.0);
      }
    }
  }
  return img;
}

}  // namespace cae::test

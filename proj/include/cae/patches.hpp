// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "cae/grid.hpp"

namespace cae {

struct PatchGrid {
  std::size_t patch_size = 0;
  std::size_t patch_rows = 0;
  std::size_t patch_cols = 0;
  std::size_t height = 0;  // original extent, before padding
  std::size_t width = 0;
  std::vector<Plane> patches;  // raster order

  std::size_t padded_height() const { return patch_rows * patch_size; }
  std::size_t padded_width() const { return patch_cols * patch_size; }
  const Plane& at(std::size_t r, std::size_t c) const { return patches[r * patch_cols + c]; }
};

inline std::size_t padded_extent(std::size_t extent, std::size_t patch_size) {
  return (extent + patch_size - 1) / patch_size * patch_size;
}

// Pads to (height, width) by repeating the last row and column.
inline Plane pad_edges(const Plane& plane, std::size_t height, std::size_t width) {
  if (plane.size() == 0 || height < plane.rows || width < plane.cols) {
    throw Error(ErrorKind::kInvalidArgument, "cannot pad an empty plane or shrink it");
  }
  Plane out(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    const std::size_t sr = std::min(r, plane.rows - 1);
    for (std::size_t c = 0; c < width; ++c) {
      out(r, c) = plane(sr, std::min(c, plane.cols - 1));
    }
  }
  return out;
}

inline PatchGrid split_patches(const Plane& plane, std::size_t patch_size = 128) {
  if (patch_size < 8 || patch_size % 2 != 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "patch size must be even and at least 8, got " + std::to_string(patch_size));
  }
  PatchGrid grid;
  grid.patch_size = patch_size;
  grid.height = plane.rows;
  grid.width = plane.cols;
  const Plane padded = pad_edges(plane, padded_extent(plane.rows, patch_size),
                                 padded_extent(plane.cols, patch_size));
  grid.patch_rows = padded.rows / patch_size;
  grid.patch_cols = padded.cols / patch_size;
  for (std::size_t pr = 0; pr < grid.patch_rows; ++pr) {
    for (std::size_t pc = 0; pc < grid.patch_cols; ++pc) {
      Plane patch(patch_size, patch_size);
      for (std::size_t r = 0; r < patch_size; ++r) {
        const auto* src = &padded(pr * patch_size + r, pc * patch_size);
        std::copy(src, src + patch_size, &patch(r, 0));
      }
      grid.patches.push_back(std::move(patch));
    }
  }
  return grid;
}

// Reassembles the padded plane and crops it back to the original extent.
inline Plane merge_patches(const PatchGrid& grid) {
  if (grid.patches.size() != grid.patch_rows * grid.patch_cols) {
    throw Error(ErrorKind::kShapeMismatch, "patch count does not match the patch grid");
  }
  Plane out(grid.height, grid.width);
  for (std::size_t r = 0; r < grid.height; ++r) {
    for (std::size_t c = 0; c < grid.width; ++c) {
      const Plane& p = grid.at(r / grid.patch_size, c / grid.patch_size);
      out(r, c) = p(r % grid.patch_size, c % grid.patch_size);
    }
  }
  return out;
}

}  // namespace cae

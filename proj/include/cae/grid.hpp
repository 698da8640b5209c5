// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cae/error.hpp"

namespace cae {

// Row-major 2-D array: image planes, coefficient planes, PCA sample matrices.
template <typename T>
struct Grid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(std::size_t r, std::size_t c, T fill = T{})
      : rows(r), cols(c), values(r * c, fill) {}
  Grid(std::size_t r, std::size_t c, std::vector<T> v)
      : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != rows * cols) {
      throw Error(ErrorKind::kShapeMismatch,
                  "grid data length " + std::to_string(values.size()) +
                      " != " + std::to_string(rows) + "x" +
                      std::to_string(cols));
    }
  }

  T& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return values[r * cols + c];
  }
  std::size_t size() const { return values.size(); }
  bool same_extent(const Grid& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Grid&) const = default;
};

using Plane = Grid<double>;

}  // namespace cae

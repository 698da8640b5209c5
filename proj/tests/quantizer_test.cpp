// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cae/quantizer.hpp"

#include <gtest/gtest.h>

#include "cae/rng.hpp"

namespace cae {
namespace {

std::int32_t q1(double v, int b = 12) {
  return quantize(Plane(1, 1, std::vector<double>{v}), b).coefficients.values[0];
}

TEST(Quantize, Examples) {
  EXPECT_EQ(q1(0.0), 0);
  EXPECT_EQ(q1(0.5), 1024);
  EXPECT_EQ(q1(-0.3), -614);
  // Halves round away from zero, symmetrically.
  EXPECT_EQ(q1(0.5 / 2048 * 3), 2);
  EXPECT_EQ(q1(-0.5 / 2048 * 3), -2);
}

TEST(Dequantize, Examples) {
  QuantizedPlane p{Grid<std::int32_t>(1, 2, std::vector<std::int32_t>{1024, 0}), 12};
  EXPECT_EQ(dequantize(p), Plane(1, 2, std::vector<double>{0.5, 0.0}));
}

TEST(Quantize, RoundTripWithinHalfStep) {
  Rng rng(1);
  Plane v(100, 100);
  for (double& x : v.values) x = rng.uniform(-4.0, 4.0);
  const Plane back = dequantize(quantize(v, 12));
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_LE(std::abs(back.values[i] - v.values[i]), 0.000244140625);
  }
}

TEST(Quantize, OutOfRangeIsRejected) {
  EXPECT_THROW(q1(1e9), Error);
  EXPECT_THROW(q1(std::nan("")), Error);
}

TEST(Bitplanes, CountMatchesMaxMagnitude) {
  QuantizedPlane p{Grid<std::int32_t>(1, 3, std::vector<std::int32_t>{0, -5, 3}), 12};
  EXPECT_EQ(p.num_bitplanes(), 3);
  p.coefficients.values = {0, 0, 0};
  EXPECT_EQ(p.num_bitplanes(), 0);
  p.coefficients.values = {0, -8, 0};
  EXPECT_EQ(p.num_bitplanes(), 4);
}

TEST(TileLayout, Rule) {
  EXPECT_EQ(tile_layout(4).cols, 2u);
  EXPECT_EQ(tile_layout(4).rows, 2u);
  EXPECT_EQ(tile_layout(32).cols, 4u);
  EXPECT_EQ(tile_layout(32).rows, 8u);
  EXPECT_EQ(tile_layout(8).cols, 2u);
  EXPECT_EQ(tile_layout(8).rows, 4u);
  EXPECT_EQ(tile_layout(1).cols, 1u);
  EXPECT_EQ(tile_layout(3).rows, 3u);
}

TEST(Tile, ColumnMajorPlacement) {
  std::vector<Grid<int>> maps;
  for (int k = 0; k < 4; ++k) maps.emplace_back(1, 1, k);
  EXPECT_EQ(tile_vertical_scan(maps), Grid<int>(2, 2, std::vector<int>{0, 2, 1, 3}));
}

TEST(Tile, PaperGeometry) {
  std::vector<Plane> maps(32, Plane(16, 16));
  const Plane tiled = tile_vertical_scan(maps);
  EXPECT_EQ(tiled.rows, 128u);
  EXPECT_EQ(tiled.cols, 64u);
}

TEST(Tile, UntileInvertsTile) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(40), h = 1 + rng.below(6), w = 1 + rng.below(6);
    std::vector<Plane> maps(n, Plane(h, w));
    for (auto& m : maps)
      for (double& v : m.values) v = rng.uniform();
    EXPECT_EQ(untile_vertical_scan(tile_vertical_scan(maps), n, h, w), maps);
  }
}

TEST(Tile, UntileRejectsWrongGeometry) {
  EXPECT_THROW(untile_vertical_scan(Plane(4, 4), 4, 3, 2), Error);
}

}  // namespace
}  // namespace cae

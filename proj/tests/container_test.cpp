// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cae/container.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "cae/metrics.hpp"
#include "cae/rng.hpp"

namespace cae {
namespace {

const CaeParams<double>& toy_model() {
  static const auto params =
      CaeParams<double>::initialize(CaeArchitecture{{4, 4, 8, 8, 8, 8}, 16}, 11);
  return params;
}

RgbImage test_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(h, w);
  const double phase = rng.uniform(0.0, 3.0);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t x = 0; x < w; ++x)
        img[c](r, x) = std::clamp(0.5 + 0.3 * std::sin(0.2 * r + phase + c) *
                                            std::cos(0.15 * x) + 0.05 * rng.normal(),
                                  0.0, 1.0);
  return img;
}

double image_psnr(const RgbImage& a, const RgbImage& b) {
  const PlanarImage x = rgb_to_ycbcr(a), y = rgb_to_ycbcr(b);
  return weighted_psnr(psnr(x[0], y[0]), psnr(x[1], y[1]), psnr(x[2], y[2]));
}

TEST(Container, HeaderLayout) {
  const auto enc = encode_image(test_image(24, 40, 1), toy_model());
  const Bytes& b = enc.bytes;
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "CAEC");
  EXPECT_EQ(b[4], kContainerVersion);
  EXPECT_EQ(b[5] | b[6] << 8, 40);    // width
  EXPECT_EQ(b[7] | b[8] << 8, 24);    // height
  EXPECT_EQ(b[9] | b[10] << 8, 16);   // patch size
  EXPECT_EQ(b[11], 12);               // B
  EXPECT_EQ(b[12], 8);                // N6
  EXPECT_EQ(b[13], 3);                // planes
  std::uint64_t id = 0;
  for (int i = 0; i < 8; ++i) id |= std::uint64_t{b[14 + i]} << (8 * i);
  EXPECT_EQ(id, model_id(toy_model()));
  EXPECT_EQ(b[22], 16);  // rotation bits
  EXPECT_EQ(b[23], 8);   // rotation dimension
}

TEST(Container, DeterministicBytes) {
  const RgbImage img = test_image(48, 40, 2);
  EXPECT_EQ(encode_image(img, toy_model()).bytes, encode_image(img, toy_model()).bytes);
  EXPECT_EQ(encode_image(img, toy_model(), ImageRate::bpp(3.0, 40, 48)).bytes,
            encode_image(img, toy_model(), ImageRate::bpp(3.0, 40, 48)).bytes);
}

TEST(Container, BppIsFileBitsOverPixels) {
  const auto enc = encode_image(test_image(48, 64, 3), toy_model(), ImageRate::bpp(3.0, 64, 48));
  EXPECT_EQ(enc.bpp(), static_cast<double>(enc.bytes.size() * 8) / (64.0 * 48.0));
  EXPECT_LE(enc.bytes.size() * 8, static_cast<std::size_t>(3.0 * 64 * 48));
  std::uint64_t total = 8 * kContainerHeaderBytes;
  for (auto bits : enc.plane_bits) total += bits;
  EXPECT_EQ(total, enc.bytes.size() * 8);
}

TEST(Container, RateSplitIsSixOneOne) {
  const auto targets = split_rate(ImageRate::bits(100000), 32);
  const std::uint64_t available = 100000 - 8 * 22 - 3 * (16 + 32 * 32 * 16);
  EXPECT_EQ(*targets[0].target_bits, available * 6 / 8);
  EXPECT_EQ(*targets[1].target_bits, available / 8);
  EXPECT_EQ(*targets[2].target_bits, available / 8);
  EXPECT_TRUE(split_rate(ImageRate::lossless(), 32)[0].is_lossless());
}

TEST(Container, RateTooSmall) {
  try {
    encode_image(test_image(16, 16, 4), toy_model(), ImageRate::bits(1000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kRateTooSmall);
  }
}

TEST(Container, LosslessMatchesNetworkReconstruction) {
  const RgbImage img = test_image(40, 48, 5);
  const auto enc = encode_image(img, toy_model());
  const auto dec = decode_image(enc.bytes, toy_model());
  EXPECT_FALSE(dec.model_mismatch);
  EXPECT_EQ(dec.rgb.height(), 40u);
  EXPECT_EQ(dec.rgb.width(), 48u);
  const RgbImage ref = cae_reconstruct(img, toy_model());
  EXPECT_GT(image_psnr(ref, dec.rgb), 50.0);
}

TEST(Container, DecodingIsDeterministic) {
  const auto enc = encode_image(test_image(48, 48, 6), toy_model(), ImageRate::bpp(4, 48, 48));
  EXPECT_EQ(decode_image(enc.bytes, toy_model()).rgb, decode_image(enc.bytes, toy_model()).rgb);
}

// Fidelity here is measured against the network's own output.
TEST(Container, HigherRateApproachesNetworkReconstruction) {
  const RgbImage img = test_image(64, 64, 7);
  const RgbImage ref = cae_reconstruct(img, toy_model());
  double previous = -1.0;
  for (double bpp : {1.5, 3.0, 6.0, 12.0, 30.0}) {
    const auto enc = encode_image(img, toy_model(), ImageRate::bpp(bpp, 64, 64));
    const double q = image_psnr(ref, decode_image(enc.bytes, toy_model()).rgb);
    EXPECT_GE(q, previous - 1e-9) << bpp;
    previous = q;
  }
}

TEST(Container, NoiseImageGivesFinitePsnr) {
  Rng rng(8);
  RgbImage img(17, 23);
  for (auto& p : img.planes)
    for (double& v : p.values) v = rng.uniform();
  const auto dec = decode_image(encode_image(img, toy_model()).bytes, toy_model());
  EXPECT_TRUE(std::isfinite(image_psnr(img, dec.rgb)));
}

TEST(Container, ModelMismatchIsFlagged) {
  const auto enc = encode_image(test_image(16, 16, 9), toy_model());
  const auto other = CaeParams<double>::initialize(toy_model().architecture, 12);
  EXPECT_TRUE(decode_image(enc.bytes, other).model_mismatch);
  const auto wrong_arch = CaeParams<double>::initialize(CaeArchitecture{{4, 4, 8, 8, 8, 4}, 16}, 1);
  EXPECT_THROW(decode_image(enc.bytes, wrong_arch), Error);
}

TEST(Container, VersionAndMagicAreChecked) {
  Bytes b = encode_image(test_image(16, 16, 10), toy_model()).bytes;
  Bytes bumped = b;
  bumped[4] = kContainerVersion + 1;
  try {
    decode_image(bumped, toy_model());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsupportedVersion);
  }
  Bytes bad = b;
  bad[0] = 'X';
  EXPECT_THROW(decode_image(bad, toy_model()), Error);
}

TEST(Container, CorruptionNamesTheSection) {
  Bytes b = encode_image(test_image(16, 16, 11), toy_model()).bytes;
  b.resize(b.size() - 3);
  try {
    decode_image(b, toy_model());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kCorruptStream);
    EXPECT_NE(std::string(e.what()).find("Cr"), std::string::npos) << e.what();
  }
  Bytes extra = encode_image(test_image(16, 16, 11), toy_model()).bytes;
  extra.push_back(0);
  EXPECT_THROW(decode_image(extra, toy_model()), Error);
}

}  // namespace
}  // namespace cae

// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cae/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "cae/rng.hpp"

namespace cae {
namespace {

Plane random_plane(std::size_t h, std::size_t w, Rng& rng) {
  Plane p(h, w);
  for (double& v : p.values) v = rng.uniform();
  return p;
}

// Smooth test image: the kind of content where SSIM is meaningful.
Plane smooth_plane(std::size_t h, std::size_t w) {
  Plane p(h, w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      p(r, c) = 0.5 + 0.3 * std::sin(0.05 * r) * std::cos(0.07 * c) + 0.1 * std::sin(0.3 * c);
  return p;
}

TEST(Psnr, Examples) {
  Plane a(4, 4, 0.3);
  EXPECT_EQ(psnr(a, a), 100.0);
  Plane b(4, 4, 0.4);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  EXPECT_NEAR(mse(a, b), 0.01, 1e-15);
  EXPECT_THROW(psnr(a, Plane(4, 5)), Error);
}

TEST(Psnr, AffineRescaleWithPeak) {
  Rng rng(1);
  const Plane a = random_plane(9, 9, rng), b = random_plane(9, 9, rng);
  Plane a2 = a, b2 = b;
  for (double& v : a2.values) v = 255.0 * v + 3.0;
  for (double& v : b2.values) v = 255.0 * v + 3.0;
  EXPECT_NEAR(psnr(a, b), psnr(a2, b2, 255.0), 1e-9);
}

TEST(WeightedPsnr, Examples) {
  EXPECT_EQ(weighted_psnr(40, 40, 40), 40.0);
  EXPECT_EQ(weighted_psnr(40, 20, 20), 35.0);
  const PlaneWeights w;
  EXPECT_EQ(w.y + w.cb + w.cr, 1.0);
}

TEST(MsSsim, IdenticalIsOne) {
  const Plane p = smooth_plane(192, 200);
  EXPECT_NEAR(ms_ssim(p, p), 1.0, 1e-9);
  Rng rng(2);
  const Plane q = random_plane(176, 176, rng);
  EXPECT_NEAR(ms_ssim(q, q), 1.0, 1e-9);
}

TEST(MsSsim, InvertedIsLow) {
  const Plane p = smooth_plane(192, 192);
  Plane inv = p;
  for (double& v : inv.values) v = 1.0 - v;
  EXPECT_LT(ms_ssim(p, inv), 0.5);
}

TEST(MsSsim, SymmetricAndBounded) {
  Rng rng(3);
  const Plane p = smooth_plane(180, 190);
  Plane q = p;
  for (double& v : q.values) v = std::clamp(v + 0.05 * rng.normal(), 0.0, 1.0);
  const double ab = ms_ssim(p, q), ba = ms_ssim(q, p);
  EXPECT_NEAR(ab, ba, 1e-12);
  EXPECT_GT(ab, 0.0);
  EXPECT_LT(ab, 1.0);
}

TEST(MsSsim, DegradesWithNoise) {
  Rng rng(4);
  const Plane p = smooth_plane(176, 176);
  double previous = 1.0;
  for (double sigma : {0.01, 0.05, 0.2}) {
    Plane q = p;
    for (double& v : q.values) v += sigma * rng.normal();
    const double s = ms_ssim(p, q);
    EXPECT_LT(s, previous);
    previous = s;
  }
}

TEST(MsSsim, TooSmallIsAnError) {
  EXPECT_THROW(ms_ssim(Plane(175, 300), Plane(175, 300)), Error);
}

RdCurve curve_from(const std::string& label, const std::vector<double>& psnrs,
                   const std::function<double(double)>& log_rate) {
  RdCurve c{label, {}};
  for (double q : psnrs) c.points.push_back({std::pow(10.0, log_rate(q)), q, 0.9, q});
  return c;
}

// Independent oracle: trapezoid rule on the generating cubics.
double quadrature_bd(const std::function<double(double)>& fa,
                     const std::function<double(double)>& fb, double lo, double hi) {
  const int n = 200000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double q = lo + i * h;
    const double w = (i == 0 || i == n) ? 0.5 : 1.0;
    s += w * (fb(q) - fa(q));
  }
  return (std::pow(10.0, s * h / (hi - lo)) - 1.0) * 100.0;
}

TEST(BdRate, IdenticalCurvesGiveZero) {
  const auto c = curve_from("a", {28, 31, 34, 38}, [](double q) { return -1.2 + 0.05 * q; });
  EXPECT_NEAR(bd_rate(c, c), 0.0, 1e-12);
}

TEST(BdRate, DoubledRateGivesHundredPercent) {
  const auto a = curve_from("a", {28, 31, 34, 38}, [](double q) {
    return -3.0 + 0.1 * q - 0.001 * (q - 30) * (q - 30);
  });
  RdCurve b = a;
  for (auto& p : b.points) p.bpp *= 2.0;
  EXPECT_NEAR(bd_rate(a, b), 100.0, 0.01);
  EXPECT_NEAR(bd_rate(b, a), -50.0, 0.01);
}

TEST(BdRate, MatchesQuadratureOracle) {
  const auto fa = [](double q) { return -4.0 + 0.12 * q + 1e-4 * std::pow(q - 32, 3); };
  const auto fb = [](double q) {
    return -4.3 + 0.125 * q - 0.002 * std::pow(q - 33, 2) + 5e-5 * std::pow(q - 33, 3);
  };
  const auto a = curve_from("anchor", {27, 30, 34, 39}, fa);
  const auto b = curve_from("test", {29, 32, 36, 41, 43}, fb);
  const double expected = quadrature_bd(fa, fb, 29, 39);
  EXPECT_NEAR(bd_rate(a, b), expected, 0.001 * std::abs(expected));
}

TEST(BdRate, ApproximateAntisymmetry) {
  const auto a = curve_from("a", {30, 33, 36, 39}, [](double q) { return -3 + 0.1 * q; });
  const auto b = curve_from("b", {30, 33, 36, 39}, [](double q) {
    return -3.1 + 0.1 * q + 0.001 * (q - 34) * (q - 34);
  });
  const double ab = bd_rate(a, b), ba = bd_rate(b, a);
  EXPECT_NEAR((1 + ab / 100) * (1 + ba / 100), 1.0, 0.01);
}

TEST(BdRate, Errors) {
  const auto a = curve_from("a", {30, 31, 32, 33}, [](double q) { return 0.1 * q - 3; });
  const auto b = curve_from("b", {40, 41, 42, 43}, [](double q) { return 0.1 * q - 3; });
  EXPECT_THROW(bd_rate(a, b), Error);
  RdCurve short_curve = a;
  short_curve.points.pop_back();
  EXPECT_THROW(bd_rate(short_curve, a), Error);
  RdCurve unsorted = a;
  std::swap(unsorted.points[0], unsorted.points[1]);
  EXPECT_THROW(bd_rate(unsorted, a), Error);
}

TEST(RdCsv, RoundTripAndGrouping) {
  const auto a = curve_from("kodim01", {28, 31, 34, 38}, [](double q) { return 0.05 * q - 2; });
  const auto b = curve_from("kodim02", {29, 32, 35, 39}, [](double q) { return 0.04 * q - 2; });
  const auto parsed = parse_rd_csv(rd_csv({a, b}));
  ASSERT_EQ(parsed.size(), 2u);
  EXPECT_EQ(parsed[1].label, "kodim02");
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(parsed[0].points[i].bpp, a.points[i].bpp);
    EXPECT_EQ(parsed[1].points[i].psnr_db, b.points[i].psnr_db);
  }
}

TEST(RdCsv, MinimalColumnsAndErrors) {
  const auto c = parse_rd_csv("label,bpp,psnr_db,msssim\nx,0.1,30,0.9\r\nx,0.2,31,0.95\n");
  EXPECT_EQ(c[0].points.size(), 2u);
  EXPECT_THROW(parse_rd_csv(""), Error);
  EXPECT_THROW(parse_rd_csv("label,bpp\nx,1\n"), Error);
  EXPECT_THROW(parse_rd_csv("label,bpp,psnr_db\nx,abc,3\n"), Error);
  EXPECT_THROW(parse_rd_csv("label,bpp,psnr_db\nx,1\n"), Error);
}

TEST(BdRateCsv, Layout) {
  EXPECT_EQ(bd_rate_csv({{"kodim01", -13.7}}), "image,bd_rate_percent\nkodim01,-13.7000\n");
}

}  // namespace
}  // namespace cae

// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "cae/grid.hpp"

namespace cae {

inline constexpr double kPsnrCap = 100.0;

inline double mse(const Plane& ref, const Plane& test) {
  if (!ref.same_extent(test) || ref.size() == 0) {
    throw Error(ErrorKind::kShapeMismatch,
                "planes differ in extent: " + std::to_string(ref.rows) + "x" +
                    std::to_string(ref.cols) + " vs " + std::to_string(test.rows) + "x" +
                    std::to_string(test.cols));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref.values[i] - test.values[i];
    s += d * d;
  }
  return s / static_cast<double>(ref.size());
}

inline double psnr(const Plane& ref, const Plane& test, double peak = 1.0) {
  const double e = mse(ref, test);
  if (e == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / e));
}

struct PlaneWeights {
  double y = 6.0 / 8.0, cb = 1.0 / 8.0, cr = 1.0 / 8.0;
};

inline double weighted_psnr(double y_db, double cb_db, double cr_db, PlaneWeights w = {}) {
  return w.y * y_db + w.cb * cb_db + w.cr * cr_db;
}

// ---------------------------------------------------------------- MS-SSIM

inline constexpr std::array<double, 5> kMsSsimExponents{0.0448, 0.2856, 0.3001, 0.2363,
                                                        0.1333};
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr std::size_t kMsSsimMinExtent = kSsimWindow << (kMsSsimExponents.size() - 1);

namespace detail {

inline std::array<double, kSsimWindow> gaussian_taps(double sigma = 1.5) {
  std::array<double, kSsimWindow> taps{};
  double total = 0.0;
  for (std::size_t i = 0; i < kSsimWindow; ++i) {
    const double d = static_cast<double>(i) - 5.0;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

// Separable Gaussian filter over the valid region only.
inline Plane filter_valid(const Plane& p) {
  static const auto taps = gaussian_taps();
  const std::size_t rows = p.rows - kSsimWindow + 1, cols = p.cols - kSsimWindow + 1;
  Plane horizontal(p.rows, cols);
  for (std::size_t r = 0; r < p.rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) s += taps[k] * p(r, c + k);
      horizontal(r, c) = s;
    }
  Plane out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < kSsimWindow; ++k) s += taps[k] * horizontal(r + k, c);
      out(r, c) = s;
    }
  return out;
}

inline Plane product(const Plane& a, const Plane& b) {
  Plane out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = a.values[i] * b.values[i];
  return out;
}

inline Plane downsample2(const Plane& p) {
  Plane out(p.rows / 2, p.cols / 2);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out(r, c) = 0.25 * (p(2 * r, 2 * c) + p(2 * r, 2 * c + 1) + p(2 * r + 1, 2 * c) +
                          p(2 * r + 1, 2 * c + 1));
  return out;
}

struct SsimTerms {
  double luminance;
  double contrast_structure;
};

inline SsimTerms ssim_terms(const Plane& x, const Plane& y, double peak) {
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
  const Plane mx = filter_valid(x), my = filter_valid(y);
  const Plane xx = filter_valid(product(x, x)), yy = filter_valid(product(y, y)),
              xy = filter_valid(product(x, y));
  double l = 0.0, cs = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double ux = mx.values[i], uy = my.values[i];
    const double vx = xx.values[i] - ux * ux, vy = yy.values[i] - uy * uy,
                 cov = xy.values[i] - ux * uy;
    l += (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
    cs += (2.0 * cov + c2) / (vx + vy + c2);
  }
  const double n = static_cast<double>(mx.size());
  return {l / n, cs / n};
}

}  // namespace detail

// Five-scale MS-SSIM. Negative per-scale terms are clamped to zero.
inline double ms_ssim(const Plane& ref, const Plane& test, double peak = 1.0) {
  mse(ref, test);  // extent check
  if (ref.rows < kMsSsimMinExtent || ref.cols < kMsSsimMinExtent) {
    throw Error(ErrorKind::kInvalidArgument,
                "MS-SSIM needs both extents >= " + std::to_string(kMsSsimMinExtent) + ", got " +
                    std::to_string(ref.rows) + "x" + std::to_string(ref.cols));
  }
  Plane x = ref, y = test;
  double result = 1.0;
  for (std::size_t s = 0; s < kMsSsimExponents.size(); ++s) {
    const auto t = detail::ssim_terms(x, y, peak);
    result *= std::pow(std::max(t.contrast_structure, 0.0), kMsSsimExponents[s]);
    if (s + 1 == kMsSsimExponents.size()) {
      result *= std::pow(std::max(t.luminance, 0.0), kMsSsimExponents[s]);
    } else {
      x = detail::downsample2(x);
      y = detail::downsample2(y);
    }
  }
  return result;
}

// ---------------------------------------------------------------- RD curves

struct RdPoint {
  double bpp = 0.0;
  double psnr_db = 0.0;
  double msssim = 0.0;
  double psnr_y_db = 0.0;
};

struct RdCurve {
  std::string label;
  std::vector<RdPoint> points;
};

inline void validate_curve(const RdCurve& c) {
  if (c.points.size() < 4) {
    throw Error(ErrorKind::kInvalidArgument,
                "curve '" + c.label + "' has " + std::to_string(c.points.size()) +
                    " points, BD-rate needs at least 4");
  }
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    const RdPoint& p = c.points[i];
    if (!(p.bpp > 0.0) || !std::isfinite(p.bpp) || !std::isfinite(p.psnr_db)) {
      throw Error(ErrorKind::kInvalidArgument, "curve '" + c.label + "' has a non-finite or "
                                               "non-positive point");
    }
    if (i > 0 && !(p.bpp > c.points[i - 1].bpp)) {
      throw Error(ErrorKind::kInvalidArgument,
                  "curve '" + c.label + "' bpp values are not strictly increasing");
    }
  }
}

// Cubic a0 + a1 t + a2 t^2 + a3 t^3 with t = (psnr - center) / scale.
struct CubicFit {
  std::array<double, 4> a{};
  double center = 0.0;
  double scale = 1.0;

  // Integral over [lo, hi] in psnr units.
  double integral(double lo, double hi) const {
    auto antiderivative = [&](double psnr) {
      const double t = (psnr - center) / scale;
      return scale * t * (a[0] + t * (a[1] / 2 + t * (a[2] / 3 + t * a[3] / 4)));
    };
    return antiderivative(hi) - antiderivative(lo);
  }
  double operator()(double psnr) const {
    const double t = (psnr - center) / scale;
    return a[0] + t * (a[1] + t * (a[2] + t * a[3]));
  }
};

// Least-squares cubic through (x, y) via the normal equations on a centered,
// scaled abscissa.
inline CubicFit fit_cubic(const std::vector<double>& x, const std::vector<double>& y) {
  CubicFit fit;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  fit.center = 0.5 * (*lo + *hi);
  fit.scale = std::max(0.5 * (*hi - *lo), 1e-12);
  std::array<std::array<double, 5>, 4> m{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = (x[i] - fit.center) / fit.scale;
    const std::array<double, 4> basis{1.0, t, t * t, t * t * t};
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) m[r][c] += basis[r] * basis[c];
      m[r][4] += basis[r] * y[i];
    }
  }
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
    std::swap(m[col], m[pivot]);
    if (std::abs(m[col][col]) < 1e-14) {
      throw Error(ErrorKind::kInvalidArgument,
                  "RD points are degenerate (need 4 distinct PSNR values)");
    }
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int c = col; c < 5; ++c) m[r][c] -= f * m[col][c];
    }
  }
  for (int r = 0; r < 4; ++r) fit.a[r] = m[r][4] / m[r][r];
  return fit;
}

inline CubicFit fit_log_rate(const RdCurve& c) {
  std::vector<double> psnr, log_rate;
  for (const RdPoint& p : c.points) {
    psnr.push_back(p.psnr_db);
    log_rate.push_back(std::log10(p.bpp));
  }
  return fit_cubic(psnr, log_rate);
}

// Average bitrate difference of `test` relative to `anchor` at equal PSNR, in
// percent. Negative values are savings.
inline double bd_rate(const RdCurve& anchor, const RdCurve& test) {
  validate_curve(anchor);
  validate_curve(test);
  auto range = [](const RdCurve& c) {
    double lo = c.points[0].psnr_db, hi = lo;
    for (const RdPoint& p : c.points) {
      lo = std::min(lo, p.psnr_db);
      hi = std::max(hi, p.psnr_db);
    }
    return std::pair{lo, hi};
  };
  const auto [alo, ahi] = range(anchor);
  const auto [tlo, thi] = range(test);
  const double lo = std::max(alo, tlo), hi = std::min(ahi, thi);
  if (!(hi > lo)) {
    throw Error(ErrorKind::kInvalidArgument, "curves '" + anchor.label + "' and '" +
                                                 test.label + "' have no PSNR overlap");
  }
  const double avg =
      (fit_log_rate(test).integral(lo, hi) - fit_log_rate(anchor).integral(lo, hi)) / (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

// ---------------------------------------------------------------- CSV

inline std::string format_double(double v, const char* fmt = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

inline constexpr const char* kRdCsvHeader = "label,bpp,psnr_db,msssim,psnr_y_db";

inline std::string rd_csv(const std::vector<RdCurve>& curves) {
  std::string out = std::string(kRdCsvHeader) + "\n";
  for (const RdCurve& c : curves) {
    for (const RdPoint& p : c.points) {
      out += c.label + "," + format_double(p.bpp) + "," + format_double(p.psnr_db) + "," +
             format_double(p.msssim) + "," + format_double(p.psnr_y_db) + "\n";
    }
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_number(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::kInvalidArgument,
              "RD CSV line " + std::to_string(line) + ": '" + s + "' is not a number");
}

}  // namespace detail

// Reads label,bpp,psnr_db,msssim[,...] rows, grouped by label in order of
// first appearance. Columns are located by header name.
inline std::vector<RdCurve> parse_rd_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kInvalidArgument, "RD CSV is empty");
  const auto header = detail::split_csv_line(line);
  auto column = [&](const std::string& name, bool required) -> std::ptrdiff_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw Error(ErrorKind::kInvalidArgument, "RD CSV lacks column " + name);
      return -1;
    }
    return it - header.begin();
  };
  const auto label = column("label", true), bpp = column("bpp", true),
             psnr_col = column("psnr_db", true), ssim = column("msssim", false),
             psnr_y = column("psnr_y_db", false);
  std::vector<RdCurve> curves;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != header.size()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "RD CSV line " + std::to_string(n) + " has " + std::to_string(f.size()) +
                      " fields, header has " + std::to_string(header.size()));
    }
    RdPoint p;
    p.bpp = detail::parse_number(f[bpp], n);
    p.psnr_db = detail::parse_number(f[psnr_col], n);
    p.msssim = ssim >= 0 ? detail::parse_number(f[ssim], n) : NAN;
    p.psnr_y_db = psnr_y >= 0 ? detail::parse_number(f[psnr_y], n) : NAN;
    auto it = std::find_if(curves.begin(), curves.end(),
                           [&](const RdCurve& c) { return c.label == f[label]; });
    if (it == curves.end()) {
      curves.push_back({f[label], {}});
      it = curves.end() - 1;
    }
    it->points.push_back(p);
  }
  if (curves.empty()) throw Error(ErrorKind::kInvalidArgument, "RD CSV has no data rows");
  return curves;
}

struct BdRateRow {
  std::string image;
  double bd_rate_percent;
};

inline std::string bd_rate_csv(const std::vector<BdRateRow>& rows) {
  std::string out = "image,bd_rate_percent\n";
  for (const auto& r : rows) out += r.image + "," + format_double(r.bd_rate_percent, "%.4f") + "\n";
  return out;
}

}  // namespace cae

// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

// PCA rotation of latent vectors. Samples are rows of an m x N matrix.
// The second-moment matrix is used as-is, without mean removal, so the
// decoder needs only the rotation.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cae/bytes.hpp"
#include "cae/grid.hpp"

namespace cae::pca {

using Matrix = Grid<double>;

struct RotationMatrix {
  Matrix u;                          // eigenvectors in columns
  std::vector<double> eigenvalues;   // non-increasing
};

inline Matrix compute_covariance(const Matrix& samples) {
  if (samples.rows == 0 || samples.cols == 0) {
    throw Error(ErrorKind::kInvalidArgument, "covariance needs at least one sample");
  }
  const std::size_t n = samples.cols;
  Matrix sigma(n, n);
  for (std::size_t s = 0; s < samples.rows; ++s) {
    const double* y = &samples.values[s * n];
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = y[i];
      if (yi == 0.0) continue;
      double* row = &sigma.values[i * n];
      for (std::size_t j = i; j < n; ++j) row[j] += yi * y[j];
    }
  }
  const double inv_m = 1.0 / static_cast<double>(samples.rows);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      sigma(i, j) *= inv_m;
      sigma(j, i) = sigma(i, j);
    }
  }
  return sigma;
}

namespace detail {

inline double frobenius(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values) s += v * v;
  return std::sqrt(s);
}

inline double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

// Makes the largest-magnitude entry of column `c` non-negative. Entries
// within a relative 1e-12 of the maximum count as tied; the lowest row wins.
inline void fix_sign(Matrix& u, std::size_t c) {
  double max_abs = 0.0;
  for (std::size_t r = 0; r < u.rows; ++r) max_abs = std::max(max_abs, std::abs(u(r, c)));
  for (std::size_t r = 0; r < u.rows; ++r) {
    if (std::abs(u(r, c)) >= max_abs * (1.0 - 1e-12)) {
      if (u(r, c) < 0.0) {
        for (std::size_t k = 0; k < u.rows; ++k) u(k, c) = -u(k, c);
      }
      return;
    }
  }
}

// Replaces columns [first, last) spanning one degenerate eigenspace with the
// Gram-Schmidt orthonormalization of that space's projections of e_0, e_1, ...
inline void canonicalize_subspace(Matrix& u, std::size_t first, std::size_t last) {
  const std::size_t n = u.rows, dim = last - first;
  std::vector<std::vector<double>> basis;
  for (std::size_t k = 0; k < n && basis.size() < dim; ++k) {
    std::vector<double> v(n, 0.0);
    for (std::size_t c = first; c < last; ++c) {
      const double coeff = u(k, c);
      for (std::size_t r = 0; r < n; ++r) v[r] += coeff * u(r, c);
    }
    for (const auto& b : basis) {
      const double proj = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t r = 0; r < n; ++r) v[r] -= proj * b[r];
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm < 1e-2) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  for (std::size_t c = first; c < first + basis.size(); ++c)
    for (std::size_t r = 0; r < n; ++r) u(r, c) = basis[c - first][r];
}

}  // namespace detail

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps until the
// off-diagonal Frobenius norm drops below 1e-12 of the matrix norm (at most
// 100 sweeps). Columns are ordered by descending eigenvalue, ties by original
// index; degenerate eigenspaces get a canonical basis and every column a
// fixed sign, so the result is deterministic.
inline RotationMatrix eigendecompose(const Matrix& sigma) {
  const std::size_t n = sigma.rows;
  if (n == 0 || sigma.cols != n) {
    throw Error(ErrorKind::kShapeMismatch, "eigendecompose needs a square matrix");
  }
  const double norm = detail::frobenius(sigma);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-9 * std::max(1.0, norm)) {
        throw Error(ErrorKind::kInvalidArgument, "matrix is not symmetric");
      }

  Matrix a = sigma;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(j, i) = a(i, j);
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

  const double tolerance = 1e-12 * norm;
  for (int sweep = 0; sweep < 100; ++sweep) {
    if (detail::off_diagonal_norm(a) <= tolerance) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  RotationMatrix out{Matrix(n, n), std::vector<double>(n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.eigenvalues[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.u(r, c) = v(r, order[c]);
  }

  double scale = 0.0;
  for (double e : out.eigenvalues) scale = std::max(scale, std::abs(e));
  const double tie = 1e-10 * scale;
  for (std::size_t first = 0; first < n;) {
    std::size_t last = first + 1;
    while (last < n && out.eigenvalues[first] - out.eigenvalues[last] <= tie) ++last;
    if (last - first > 1) detail::canonicalize_subspace(out.u, first, last);
    first = last;
  }
  for (std::size_t c = 0; c < n; ++c) detail::fix_sign(out.u, c);
  return out;
}

// Each sample row y becomes (U^T y)^T = y^T U.
inline Matrix rotate(const Matrix& samples, const Matrix& u) {
  if (samples.cols != u.rows || u.rows != u.cols) {
    throw Error(ErrorKind::kShapeMismatch, "rotate: dimension mismatch");
  }
  const std::size_t n = u.cols;
  Matrix out(samples.rows, n);
  for (std::size_t s = 0; s < samples.rows; ++s)
    for (std::size_t k = 0; k < n; ++k) {
      const double y = samples(s, k);
      if (y == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(s, j) += y * u(k, j);
    }
  return out;
}

// Each rotated row r becomes (U r)^T.
inline Matrix inverse_rotate(const Matrix& rotated, const Matrix& u) {
  if (rotated.cols != u.cols || u.rows != u.cols) {
    throw Error(ErrorKind::kShapeMismatch, "inverse_rotate: dimension mismatch");
  }
  const std::size_t n = u.rows;
  Matrix out(rotated.rows, n);
  for (std::size_t s = 0; s < rotated.rows; ++s)
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += u(i, j) * rotated(s, j);
      out(s, i) = acc;
    }
  return out;
}

// Rotation side information: entries in [-1, 1] quantized to signed codes
// in [-(2^(bits-1) - 1), 2^(bits-1) - 1], so 0 and +-1 are exact.
struct QuantizedRotation {
  int bits = 16;
  std::size_t dimension = 0;
  std::vector<std::int32_t> codes;  // row-major

  double step() const { return 1.0 / static_cast<double>(max_code()); }
  std::int32_t max_code() const { return (std::int32_t{1} << (bits - 1)) - 1; }
  bool operator==(const QuantizedRotation&) const = default;
};

inline QuantizedRotation quantize_rotation(const Matrix& u, int bits = 16) {
  if (bits < 2 || bits > 16) {
    throw Error(ErrorKind::kInvalidArgument, "rotation bits must be in [2, 16]");
  }
  if (u.rows != u.cols || u.rows == 0 || u.rows > 255) {
    throw Error(ErrorKind::kShapeMismatch, "rotation must be square, at most 255");
  }
  QuantizedRotation q{bits, u.rows, std::vector<std::int32_t>(u.size())};
  const double scale = static_cast<double>(q.max_code());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double c = std::round(std::clamp(u.values[i], -1.0, 1.0) * scale);
    q.codes[i] = static_cast<std::int32_t>(c);
  }
  return q;
}

inline Matrix dequantize_rotation(const QuantizedRotation& q) {
  Matrix u(q.dimension, q.dimension);
  const double scale = static_cast<double>(q.max_code());
  for (std::size_t i = 0; i < u.size(); ++i) u.values[i] = q.codes[i] / scale;
  return u;
}

// Serialized block: u8 bits per entry, u8 dimension, then dimension^2 codes
// row-major, each stored offset-binary in `bits` bits, packed LSB first
// (plain little-endian u16 at 16 bits), padded to a byte.
inline std::size_t rotation_block_bits(std::size_t dimension, int bits) {
  return 16 + ((dimension * dimension * static_cast<std::size_t>(bits) + 7) / 8) * 8;
}

inline void write_rotation(ByteWriter& w, const QuantizedRotation& q) {
  w.u8(static_cast<std::uint8_t>(q.bits));
  w.u8(static_cast<std::uint8_t>(q.dimension));
  std::uint64_t acc = 0;
  int filled = 0;
  for (std::int32_t code : q.codes) {
    acc |= static_cast<std::uint64_t>(code + q.max_code()) << filled;
    filled += q.bits;
    while (filled >= 8) {
      w.u8(static_cast<std::uint8_t>(acc));
      acc >>= 8;
      filled -= 8;
    }
  }
  if (filled > 0) w.u8(static_cast<std::uint8_t>(acc));
}

inline QuantizedRotation read_rotation(ByteReader& r, std::size_t expected_dimension) {
  QuantizedRotation q;
  q.bits = r.u8();
  q.dimension = r.u8();
  if (q.bits < 2 || q.bits > 16) r.fail("bad rotation precision");
  if (q.dimension != expected_dimension) r.fail("rotation dimension mismatch");
  const std::size_t count = q.dimension * q.dimension;
  q.codes.resize(count);
  std::uint64_t acc = 0;
  int filled = 0;
  const std::uint64_t mask = (std::uint64_t{1} << q.bits) - 1;
  for (std::size_t i = 0; i < count; ++i) {
    while (filled < q.bits) {
      acc |= std::uint64_t{r.u8()} << filled;
      filled += 8;
    }
    const auto raw = static_cast<std::int32_t>(acc & mask);
    if (raw > 2 * q.max_code()) r.fail("rotation code out of range");
    q.codes[i] = raw - q.max_code();
    acc >>= q.bits;
    filled -= q.bits;
  }
  return q;
}

}  // namespace cae::pca

// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

// Embedded bitplane coder for integer coefficient planes.
//
// Layout (little-endian):
//   u16 rows, u16 cols, u8 num_bitplanes, u8 flags, u32 payload length,
//   payload = one segment per coded bitplane, most significant first, each
//             a LEB128 byte length followed by an independently terminated
//             arithmetic-coded segment.
//
// Within a bitplane coefficients are visited in raster order. A coefficient
// not yet significant codes its magnitude bit in one of two significance
// contexts (chosen by whether any 4-neighbour is already significant); when
// that bit is 1 its sign follows in the sign context. Significant
// coefficients code a refinement bit. Context statistics carry over from
// plane to plane, so a prefix of whole segments is always decodable.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "cae/arithmetic_coder.hpp"
#include "cae/bytes.hpp"
#include "cae/quantizer.hpp"

namespace cae {

inline constexpr std::size_t kPlaneHeaderBytes = 10;

// Flag bit set when rate control dropped trailing bitplanes.
inline constexpr std::uint8_t kFlagTruncated = 0x01;

// Target size of a coded plane, in bits, or unlimited ("lossless to the
// quantizer precision").
struct RateTarget {
  std::optional<std::uint64_t> target_bits;

  static RateTarget lossless() { return {}; }
  static RateTarget bits(std::uint64_t n) { return {n}; }
  bool is_lossless() const { return !target_bits.has_value(); }
};

namespace detail {

struct PlaneContexts {
  std::array<BinaryContext, 2> significance;
  BinaryContext refinement;
  BinaryContext sign;
};

inline bool has_significant_neighbour(const std::vector<std::uint8_t>& sig,
                                      std::size_t rows, std::size_t cols,
                                      std::size_t r, std::size_t c) {
  const std::size_t i = r * cols + c;
  return (r > 0 && sig[i - cols]) || (r + 1 < rows && sig[i + cols]) ||
         (c > 0 && sig[i - 1]) || (c + 1 < cols && sig[i + 1]);
}

inline void write_leb128(ByteWriter& w, std::uint64_t v) {
  do {
    std::uint8_t b = v & 0x7F;
    v >>= 7;
    if (v) b |= 0x80;
    w.u8(b);
  } while (v);
}

inline std::uint64_t read_leb128(ByteReader& r) {
  std::uint64_t v = 0;
  for (int shift = 0; shift < 35; shift += 7) {
    if (r.remaining() == 0) {
      r.fail("payload ends inside a segment length (not at a bitplane boundary)");
    }
    const std::uint8_t b = r.u8();
    v |= std::uint64_t{b & 0x7Fu} << shift;
    if (!(b & 0x80)) return v;
  }
  r.fail("segment length too long");
}

}  // namespace detail

// Codes `plane` and keeps whole bitplanes, most significant first, while the
// total size stays within the target.
inline Bytes encode_plane(const QuantizedPlane& plane, const RateTarget& rate) {
  const auto& grid = plane.coefficients;
  if (grid.rows == 0 || grid.cols == 0 || grid.rows > 0xFFFF || grid.cols > 0xFFFF) {
    throw Error(ErrorKind::kInvalidArgument,
                "plane extents must be in [1, 65535]");
  }
  const int planes = plane.num_bitplanes();
  if (planes > kMaxBitplanes) {
    throw Error(ErrorKind::kInvalidArgument, "coefficients exceed 30 bitplanes");
  }
  if (rate.target_bits && *rate.target_bits < kPlaneHeaderBytes * 8) {
    throw Error(ErrorKind::kRateTooSmall,
                "target of " + std::to_string(*rate.target_bits) +
                    " bits is below the " + std::to_string(kPlaneHeaderBytes * 8) +
                    "-bit plane header");
  }

  const std::size_t rows = grid.rows, cols = grid.cols, n = grid.size();
  std::vector<std::uint32_t> mag(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int64_t v = grid.values[i];
    mag[i] = static_cast<std::uint32_t>(v < 0 ? -v : v);
  }
  std::vector<std::uint8_t> sig(n, 0);
  detail::PlaneContexts ctx;
  std::vector<Bytes> segments;
  for (int p = planes - 1; p >= 0; --p) {
    ArithmeticEncoder enc;
    for (std::size_t r = 0, i = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c, ++i) {
        const bool bit = (mag[i] >> p) & 1u;
        if (sig[i]) {
          enc.encode(bit, ctx.refinement);
          continue;
        }
        const bool near = detail::has_significant_neighbour(sig, rows, cols, r, c);
        enc.encode(bit, ctx.significance[near ? 1 : 0]);
        if (bit) {
          enc.encode(grid.values[i] < 0, ctx.sign);
          sig[i] = 1;
        }
      }
    }
    segments.push_back(enc.finish());
  }

  ByteWriter payload;
  std::size_t kept = 0;
  for (const Bytes& seg : segments) {
    ByteWriter piece;
    detail::write_leb128(piece, seg.size());
    piece.bytes(seg);
    const std::uint64_t total_bits =
        8 * (kPlaneHeaderBytes + payload.size() + piece.size());
    if (rate.target_bits && total_bits > *rate.target_bits) break;
    payload.bytes(piece.buffer());
    ++kept;
  }

  ByteWriter out;
  out.u16(static_cast<std::uint16_t>(rows));
  out.u16(static_cast<std::uint16_t>(cols));
  out.u8(static_cast<std::uint8_t>(planes));
  out.u8(kept < segments.size() ? kFlagTruncated : 0);
  out.u32(static_cast<std::uint32_t>(payload.size()));
  out.bytes(payload.buffer());
  return out.take();
}

struct DecodedPlane {
  QuantizedPlane plane;        // reconstructed coefficients
  int num_bitplanes = 0;       // planes in the original coefficients
  int transmitted_bitplanes = 0;
};

// Decodes one coded plane from `r`. Untransmitted low bitplanes are
// reconstructed at the midpoint of their interval: a significant magnitude
// gets 2^(k-1) added when the lowest k planes are missing.
inline DecodedPlane decode_plane(ByteReader& r, int precision_bits,
                                 std::optional<std::pair<std::size_t, std::size_t>>
                                     expected_dims = std::nullopt) {
  const std::size_t rows = r.u16(), cols = r.u16();
  const int planes = r.u8();
  const std::uint8_t flags = r.u8();
  const std::uint32_t payload_size = r.u32();
  if (rows == 0 || cols == 0) r.fail("empty plane");
  if (planes > kMaxBitplanes) r.fail("too many bitplanes");
  if (flags & ~kFlagTruncated) r.fail("unknown flags");
  if (expected_dims && (expected_dims->first != rows || expected_dims->second != cols)) {
    r.fail("plane is " + std::to_string(rows) + "x" + std::to_string(cols) +
           ", expected " + std::to_string(expected_dims->first) + "x" +
           std::to_string(expected_dims->second));
  }
  ByteReader payload(r.bytes(payload_size), r.section() + " payload");

  const std::size_t n = rows * cols;
  std::vector<std::uint32_t> mag(n, 0);
  std::vector<std::uint8_t> sig(n, 0), negative(n, 0);
  detail::PlaneContexts ctx;
  int transmitted = 0;
  while (payload.remaining() > 0) {
    if (transmitted == planes) payload.fail("more segments than bitplanes");
    const std::uint64_t length = detail::read_leb128(payload);
    if (length > payload.remaining()) {
      payload.fail("payload ends inside a bitplane segment");
    }
    ArithmeticDecoder dec(payload.bytes(static_cast<std::size_t>(length)));
    const int p = planes - 1 - transmitted;
    for (std::size_t row = 0, i = 0; row < rows; ++row) {
      for (std::size_t c = 0; c < cols; ++c, ++i) {
        if (sig[i]) {
          if (dec.decode(ctx.refinement)) mag[i] |= 1u << p;
          continue;
        }
        const bool near = detail::has_significant_neighbour(sig, rows, cols, row, c);
        if (dec.decode(ctx.significance[near ? 1 : 0])) {
          mag[i] |= 1u << p;
          negative[i] = dec.decode(ctx.sign);
          sig[i] = 1;
        }
      }
    }
    ++transmitted;
  }

  const int missing = planes - transmitted;
  const std::uint32_t offset = missing >= 1 ? (1u << (missing - 1)) : 0u;
  DecodedPlane out{{Grid<std::int32_t>(rows, cols), precision_bits}, planes, transmitted};
  for (std::size_t i = 0; i < n; ++i) {
    if (!sig[i]) continue;
    const auto m = static_cast<std::int32_t>(mag[i] + offset);
    out.plane.coefficients.values[i] = negative[i] ? -m : m;
  }
  return out;
}

inline QuantizedPlane decode_plane(std::span<const std::uint8_t> bytes,
                                   int precision_bits = kDefaultPrecisionBits,
                                   std::optional<std::pair<std::size_t, std::size_t>>
                                       expected_dims = std::nullopt) {
  ByteReader r(bytes, "coded plane");
  DecodedPlane d = decode_plane(r, precision_bits, expected_dims);
  if (r.remaining() != 0) r.fail("trailing bytes after plane");
  return std::move(d.plane);
}

// Keeps the header and the first `bitplanes` segments of a coded plane,
// producing the same stream a lower-rate encode would have cut.
inline Bytes truncate_plane(std::span<const std::uint8_t> coded, int bitplanes) {
  ByteReader r(coded, "coded plane");
  r.bytes(kPlaneHeaderBytes);
  std::size_t end = kPlaneHeaderBytes;
  for (int s = 0; s < bitplanes && r.remaining() > 0; ++s) {
    r.bytes(static_cast<std::size_t>(detail::read_leb128(r)));
    end = r.position();
  }
  Bytes out(coded.begin(), coded.begin() + static_cast<std::ptrdiff_t>(end));
  const auto payload = static_cast<std::uint32_t>(end - kPlaneHeaderBytes);
  for (int i = 0; i < 4; ++i) out[6 + i] = static_cast<std::uint8_t>(payload >> (8 * i));
  if (end < coded.size()) out[5] |= kFlagTruncated;
  return out;
}

}  // namespace cae

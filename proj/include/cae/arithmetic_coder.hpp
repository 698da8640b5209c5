// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

// Adaptive binary arithmetic coder: 32-bit integer interval arithmetic with
// carry-free bit output (pending-bit "follow" counting) and count-based
// probability estimates.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cae {

// Symbol counts start at 1 (Laplace estimate) and are halved once their sum
// exceeds kMaxTotal, which keeps the model adaptive.
class BinaryContext {
 public:
  static constexpr std::uint32_t kMaxTotal = 1u << 12;

  std::uint32_t zeros() const { return zeros_; }
  std::uint32_t total() const { return zeros_ + ones_; }

  void update(bool bit) {
    (bit ? ones_ : zeros_) += 1;
    if (total() > kMaxTotal) {
      zeros_ = (zeros_ + 1) / 2;
      ones_ = (ones_ + 1) / 2;
    }
  }

 private:
  std::uint32_t zeros_ = 1;
  std::uint32_t ones_ = 1;
};

namespace detail {

inline constexpr std::uint64_t kTop = 0xFFFFFFFFull;
inline constexpr std::uint64_t kHalf = 0x80000000ull;
inline constexpr std::uint64_t kQuarter = 0x40000000ull;

// Last value of the lower (zero) sub-interval of [low, high].
inline std::uint64_t split_point(std::uint64_t low, std::uint64_t high,
                                 const BinaryContext& ctx) {
  const std::uint64_t range = high - low + 1;
  return low + range * ctx.zeros() / ctx.total() - 1;
}

}  // namespace detail

class ArithmeticEncoder {
 public:
  void encode(bool bit, BinaryContext& ctx) {
    const std::uint64_t split = detail::split_point(low_, high_, ctx);
    if (bit) {
      low_ = split + 1;
    } else {
      high_ = split;
    }
    ctx.update(bit);
    for (;;) {
      if (high_ < detail::kHalf) {
        emit(false);
      } else if (low_ >= detail::kHalf) {
        emit(true);
        low_ -= detail::kHalf;
        high_ -= detail::kHalf;
      } else if (low_ >= detail::kQuarter &&
                 high_ < detail::kHalf + detail::kQuarter) {
        ++pending_;
        low_ -= detail::kQuarter;
        high_ -= detail::kQuarter;
      } else {
        break;
      }
      low_ = 2 * low_;
      high_ = 2 * high_ + 1;
    }
  }

  // Emits enough bits to pin a value inside the final interval and returns
  // the byte stream (zero-padded). The encoder must not be reused.
  std::vector<std::uint8_t> finish() {
    ++pending_;
    emit(low_ >= detail::kQuarter);
    if (bit_count_ % 8 != 0) {
      bytes_.push_back(static_cast<std::uint8_t>(current_ << (8 - bit_count_ % 8)));
    }
    return std::move(bytes_);
  }

 private:
  void put_bit(bool bit) {
    current_ = static_cast<std::uint8_t>((current_ << 1) | (bit ? 1 : 0));
    if (++bit_count_ % 8 == 0) {
      bytes_.push_back(current_);
      current_ = 0;
    }
  }

  void emit(bool bit) {
    put_bit(bit);
    for (; pending_ > 0; --pending_) put_bit(!bit);
  }

  std::uint64_t low_ = 0;
  std::uint64_t high_ = detail::kTop;
  std::uint64_t pending_ = 0;
  std::uint64_t bit_count_ = 0;
  std::uint8_t current_ = 0;
  std::vector<std::uint8_t> bytes_;
};

// Reads past the end of the segment as zero bits, matching the encoder's
// zero padding.
class ArithmeticDecoder {
 public:
  explicit ArithmeticDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
    for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | next_bit();
  }

  bool decode(BinaryContext& ctx) {
    const std::uint64_t split = detail::split_point(low_, high_, ctx);
    const bool bit = value_ > split;
    if (bit) {
      low_ = split + 1;
    } else {
      high_ = split;
    }
    ctx.update(bit);
    for (;;) {
      if (high_ < detail::kHalf) {
      } else if (low_ >= detail::kHalf) {
        low_ -= detail::kHalf;
        high_ -= detail::kHalf;
        value_ -= detail::kHalf;
      } else if (low_ >= detail::kQuarter &&
                 high_ < detail::kHalf + detail::kQuarter) {
        low_ -= detail::kQuarter;
        high_ -= detail::kQuarter;
        value_ -= detail::kQuarter;
      } else {
        break;
      }
      low_ = 2 * low_;
      high_ = 2 * high_ + 1;
      value_ = 2 * value_ + next_bit();
    }
    return bit;
  }

 private:
  std::uint64_t next_bit() {
    const std::size_t byte = position_ / 8;
    std::uint64_t bit = 0;
    if (byte < in_.size()) bit = (in_[byte] >> (7 - position_ % 8)) & 1u;
    ++position_;
    return bit;
  }

  std::span<const std::uint8_t> in_;
  std::size_t position_ = 0;
  std::uint64_t low_ = 0;
  std::uint64_t high_ = detail::kTop;
  std::uint64_t value_ = 0;
};

}  // namespace cae

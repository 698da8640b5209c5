// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "cae/bytes.hpp"
#include "cae/color.hpp"

// Netpbm reader and writer. P5/P6 (binary) and P2/P3 (ASCII) are accepted,
// 8- or 16-bit samples. Grayscale input is replicated into all three channels.
namespace cae {

struct PnmImage {
  RgbImage rgb;
  bool grayscale = false;
};

namespace detail {

class PnmTokenizer {
 public:
  explicit PnmTokenizer(std::span<const std::uint8_t> data) : data_(data) {}

  unsigned long number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= data_.size() || !std::isdigit(data_[pos_])) {
      throw Error(ErrorKind::kCorruptStream,
                  std::string("PNM: expected ") + what + " at byte " + std::to_string(pos_));
    }
    unsigned long v = 0;
    while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
      v = v * 10 + (data_[pos_++] - '0');
      if (v > 0xFFFFFFul) {
        throw Error(ErrorKind::kCorruptStream, std::string("PNM: ") + what + " too large");
      }
    }
    return v;
  }

  // Binary rasters start after exactly one whitespace byte following maxval.
  std::size_t raster_start() {
    if (pos_ >= data_.size() || !std::isspace(data_[pos_])) {
      throw Error(ErrorKind::kCorruptStream, "PNM: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (std::isspace(data_[pos_])) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 2;
};

}  // namespace detail

inline PnmImage parse_pnm(std::span<const std::uint8_t> data) {
  if (data.size() < 2 || data[0] != 'P' || data[1] < '2' || data[1] > '6' || data[1] == '4') {
    throw Error(ErrorKind::kCorruptStream, "not a PGM/PPM file (expected P2, P3, P5 or P6)");
  }
  const char kind = static_cast<char>(data[1]);
  const bool ascii = kind == '2' || kind == '3';
  const bool gray = kind == '2' || kind == '5';
  detail::PnmTokenizer tok(data);
  const auto width = tok.number("width");
  const auto height = tok.number("height");
  const auto maxval = tok.number("maxval");
  if (width == 0 || height == 0 || width > 65535 || height > 65535) {
    throw Error(ErrorKind::kCorruptStream, "PNM: unsupported extent " + std::to_string(width) +
                                               "x" + std::to_string(height));
  }
  if (maxval == 0 || maxval > 65535) {
    throw Error(ErrorKind::kCorruptStream, "PNM: maxval out of range");
  }
  const std::size_t channels = gray ? 1 : 3;
  const std::size_t samples = width * height * channels;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;

  PnmImage img{RgbImage(height, width), gray};
  std::size_t pos = ascii ? 0 : tok.raster_start();
  if (!ascii && data.size() - pos < samples * sample_bytes) {
    throw Error(ErrorKind::kCorruptStream, "PNM: raster shorter than header declares");
  }
  for (std::size_t s = 0; s < samples; ++s) {
    unsigned long v;
    if (ascii) {
      v = tok.number("sample");
    } else if (sample_bytes == 2) {
      v = (static_cast<unsigned long>(data[pos]) << 8) | data[pos + 1];
      pos += 2;
    } else {
      v = data[pos++];
    }
    if (v > maxval) throw Error(ErrorKind::kCorruptStream, "PNM: sample exceeds maxval");
    const double x = static_cast<double>(v) / static_cast<double>(maxval);
    const std::size_t pixel = s / channels;
    if (gray) {
      for (std::size_t c = 0; c < 3; ++c) img.rgb[c].values[pixel] = x;
    } else {
      img.rgb[s % 3].values[pixel] = x;
    }
  }
  return img;
}

inline PnmImage read_pnm(const std::filesystem::path& path) {
  try {
    return parse_pnm(read_file(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(clamp_unit(v) * 255.0));
}

// 8-bit P6, or P5 when `grayscale` is set (channel 0 only).
inline Bytes serialize_pnm(const RgbImage& img, bool grayscale = false) {
  img.require_consistent();
  ByteWriter w;
  w.text(std::string(grayscale ? "P5\n" : "P6\n") + std::to_string(img.width()) + " " +
         std::to_string(img.height()) + "\n255\n");
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (grayscale) {
      w.u8(to_byte(img[0].values[i]));
    } else {
      for (std::size_t c = 0; c < 3; ++c) w.u8(to_byte(img[c].values[i]));
    }
  }
  return w.take();
}

inline void write_pnm(const std::filesystem::path& path, const RgbImage& img,
                      bool grayscale = false) {
  write_file_atomic(path, serialize_pnm(img, grayscale));
}

}  // namespace cae

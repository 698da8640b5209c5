// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cae/color.hpp"
#include "cae/patches.hpp"
#include "cae/pnm.hpp"
#include "cae/rng.hpp"
#include "cae/tensor.hpp"

namespace cae {

struct DatasetReject {
  std::filesystem::path path;
  std::string reason;
};

template <typename T>
struct Dataset {
  std::vector<Tensor<T>> patches;  // each (1, 1, P, P)
  std::vector<std::filesystem::path> sources;
  std::vector<DatasetReject> rejects;
};

// Luma planes of every decodable image directly inside `directory`, in
// file-name order. Images smaller than the patch are edge-padded.
inline std::vector<Plane> load_luma_planes(const std::filesystem::path& directory,
                                           std::size_t patch_size,
                                           std::vector<std::filesystem::path>& sources,
                                           std::vector<DatasetReject>& rejects) {
  std::error_code ec;
  if (!std::filesystem::is_directory(directory, ec)) {
    throw Error(ErrorKind::kIo, "dataset directory not found: " + directory.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Plane> planes;
  for (const auto& f : files) {
    try {
      Plane y = rgb_to_ycbcr(read_pnm(f).rgb)[0];
      if (y.rows < patch_size || y.cols < patch_size) {
        y = pad_edges(y, std::max(y.rows, patch_size), std::max(y.cols, patch_size));
      }
      planes.push_back(std::move(y));
      sources.push_back(f);
    } catch (const Error& e) {
      rejects.push_back({f, e.what()});
    }
  }
  return planes;
}

// `count` crops drawn uniformly over images and valid positions. Crop k
// depends only on (seed, k).
template <typename T>
Dataset<T> ingest_dataset(const std::filesystem::path& directory, std::size_t patch_size,
                          std::size_t count, std::uint64_t seed) {
  Dataset<T> ds;
  const auto planes = load_luma_planes(directory, patch_size, ds.sources, ds.rejects);
  if (planes.empty()) {
    std::string msg = "no decodable PGM/PPM images in " + directory.string();
    for (const auto& r : ds.rejects) msg += "\n  rejected " + r.path.string() + ": " + r.reason;
    throw Error(ErrorKind::kEmptyDataset, msg);
  }
  ds.patches.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Rng rng = Rng::derive(seed, k);
    const Plane& img = planes[rng.below(planes.size())];
    const std::size_t top = rng.below(img.rows - patch_size + 1);
    const std::size_t left = rng.below(img.cols - patch_size + 1);
    Tensor<T> patch({1, 1, patch_size, patch_size});
    for (std::size_t r = 0; r < patch_size; ++r)
      for (std::size_t c = 0; c < patch_size; ++c)
        patch(0, 0, r, c) = static_cast<T>(img(top + r, left + c));
    ds.patches.push_back(std::move(patch));
  }
  return ds;
}

}  // namespace cae

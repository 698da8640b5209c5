// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "cae/network.hpp"
#include "cae/train.hpp"

namespace cae {

// Everything `cae train` reads from its config file.
struct RunConfig {
  TrainConfig train;
  CaeArchitecture architecture;
  std::size_t dataset_patches = 5500;
  std::uint64_t init_seed = 0;
  std::string precision = "float";  // float or double
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename V>
V parse_value(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  V v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) {
    throw Error(ErrorKind::kInvalidArgument, "config: bad value '" + text + "' for " + key);
  }
  if constexpr (std::is_unsigned_v<V>) {
    if (text.find('-') != std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "config: " + key + " must be non-negative");
    }
  }
  return v;
}

}  // namespace detail

// Flat key=value text. Blank lines and lines starting with '#' are ignored;
// unknown keys are an error.
inline RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument,
                  "config line " + std::to_string(n) + ": expected key=value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    using detail::parse_value;
    if (key == "lambda") {
      cfg.train.lambda = parse_value<double>(key, value);
    } else if (key == "noise_halfwidth") {
      cfg.train.noise_halfwidth = parse_value<double>(key, value);
    } else if (key == "batch_size") {
      cfg.train.batch_size = parse_value<std::size_t>(key, value);
    } else if (key == "max_iterations") {
      cfg.train.max_iterations = parse_value<std::uint64_t>(key, value);
    } else if (key == "learning_rate") {
      cfg.train.learning_rate = parse_value<double>(key, value);
    } else if (key == "seed") {
      cfg.train.seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "checkpoint_interval") {
      cfg.train.checkpoint_interval = parse_value<std::uint64_t>(key, value);
    } else if (key == "patch_size") {
      cfg.architecture.patch_size = parse_value<std::size_t>(key, value);
    } else if (key == "filters") {
      std::istringstream list(value);
      std::string item;
      std::size_t i = 0;
      while (std::getline(list, item, ',')) {
        if (i == CaeArchitecture::kLayers) {
          throw Error(ErrorKind::kInvalidArgument, "config: filters needs exactly 6 values");
        }
        cfg.architecture.filter_counts[i++] = parse_value<std::size_t>(key, detail::trim(item));
      }
      if (i != CaeArchitecture::kLayers) {
        throw Error(ErrorKind::kInvalidArgument, "config: filters needs exactly 6 values");
      }
    } else if (key == "dataset_patches") {
      cfg.dataset_patches = parse_value<std::size_t>(key, value);
    } else if (key == "init_seed") {
      cfg.init_seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "precision") {
      if (value != "float" && value != "double") {
        throw Error(ErrorKind::kInvalidArgument, "config: precision must be float or double");
      }
      cfg.precision = value;
    } else {
      throw Error(ErrorKind::kInvalidArgument,
                  "config line " + std::to_string(n) + ": unknown key '" + key + "'");
    }
  }
  cfg.train.validate();
  cfg.architecture.validate();
  return cfg;
}

}  // namespace cae

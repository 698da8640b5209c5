// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint file layout (little-endian):
//   "CAEP"  u32 version
//   u32 patch_size, u32 layer count, u32 filter count per layer
//   u32 tensor count, then per tensor:
//     u32 name length, name, u32 rank, u32 extents..., f64 values...
// Parameter tensors are named "enc<i>.<part>" / "dec<j>.<part>". Training
// state, when present, is stored as "train.iteration", "adam.step" and the
// moment tensors "adam.m.<name>" / "adam.v.<name>".

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cae/bytes.hpp"
#include "cae/network.hpp"

namespace cae {

inline constexpr std::array<char, 4> kCheckpointMagic{'C', 'A', 'E', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
struct TrainerState {
  CaeParams<T> params;
  std::vector<AdamState<T>> optimizer;  // one per tensor, for_each_tensor order
  std::uint64_t iteration = 0;

  static TrainerState fresh(CaeParams<T> params, double learning_rate) {
    TrainerState s;
    s.params = std::move(params);
    s.params.for_each_tensor([&](const std::string&, const Tensor<T>& t) {
      s.optimizer.push_back(AdamState<T>::zeros_like(t, learning_rate));
    });
    return s;
  }
};

namespace detail {

template <typename T>
void write_tensor(ByteWriter& w, const std::string& name, const Tensor<T>& t) {
  w.u32(static_cast<std::uint32_t>(name.size()));
  w.text(name);
  w.u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t e : t.shape()) w.u32(static_cast<std::uint32_t>(e));
  for (T v : t.values()) w.f64(static_cast<double>(v));
}

template <typename T>
void write_params(ByteWriter& w, const CaeParams<T>& params) {
  params.for_each_tensor(
      [&](const std::string& name, const Tensor<T>& t) { write_tensor(w, name, t); });
}

inline void write_header(ByteWriter& w, const CaeArchitecture& arch,
                         std::uint32_t tensor_count) {
  for (char c : kCheckpointMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(arch.patch_size));
  w.u32(CaeArchitecture::kLayers);
  for (std::size_t n : arch.filter_counts) w.u32(static_cast<std::uint32_t>(n));
  w.u32(tensor_count);
}

}  // namespace detail

// 8-byte identity of a parameter set: FNV-1a over the serialized tensors.
template <typename T>
std::uint64_t model_id(const CaeParams<T>& params) {
  ByteWriter w;
  detail::write_params(w, params);
  return fnv1a64(w.buffer());
}

template <typename T>
Bytes serialize_checkpoint(const TrainerState<T>& state) {
  const std::size_t tensors = state.optimizer.size();
  const bool with_optimizer = tensors > 0;
  ByteWriter w;
  std::size_t count = 0;
  state.params.for_each_tensor([&](const std::string&, const Tensor<T>&) { ++count; });
  if (with_optimizer && tensors != count) {
    throw Error(ErrorKind::kInvalidArgument,
                "optimizer state does not match parameter tensors");
  }
  const std::size_t total = with_optimizer ? 3 * count + 2 : count;
  detail::write_header(w, state.params.architecture,
                       static_cast<std::uint32_t>(total));
  detail::write_params(w, state.params);
  if (with_optimizer) {
    detail::write_tensor(w, "train.iteration",
                         Tensor<double>({1}, {static_cast<double>(state.iteration)}));
    detail::write_tensor(
        w, "adam.step",
        Tensor<double>({1}, {static_cast<double>(state.optimizer.front().step_count)}));
    std::size_t k = 0;
    state.params.for_each_tensor([&](const std::string& name, const Tensor<T>&) {
      detail::write_tensor(w, "adam.m." + name, state.optimizer[k].first_moment);
      detail::write_tensor(w, "adam.v." + name, state.optimizer[k].second_moment);
      ++k;
    });
  }
  return w.take();
}

template <typename T>
Bytes serialize_checkpoint(const CaeParams<T>& params) {
  TrainerState<T> state;
  state.params = params;
  return serialize_checkpoint(state);
}

// Parses a checkpoint. Optimizer moments are restored when present, with
// `learning_rate` applied to the restored state.
template <typename T>
TrainerState<T> parse_checkpoint(std::span<const std::uint8_t> data,
                                 double learning_rate = 1e-4) {
  ByteReader r(data, "checkpoint header");
  if (r.remaining() < 4 || r.text(4) != std::string(kCheckpointMagic.begin(),
                                                    kCheckpointMagic.end())) {
    throw Error(ErrorKind::kCorruptStream, "checkpoint: bad magic");
  }
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kUnsupportedVersion,
                "checkpoint version " + std::to_string(version));
  }
  CaeArchitecture arch;
  arch.patch_size = r.u32();
  if (r.u32() != CaeArchitecture::kLayers) r.fail("unexpected layer count");
  for (std::size_t& n : arch.filter_counts) n = r.u32();
  try {
    arch.validate();
  } catch (const Error& e) {
    r.fail(e.what());
  }
  const std::uint32_t count = r.u32();

  std::map<std::string, Tensor<double>> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    r.set_section("checkpoint tensor " + std::to_string(k));
    const std::uint32_t name_len = r.u32();
    if (name_len > 256) r.fail("tensor name too long");
    std::string name = r.text(name_len);
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) r.fail("bad tensor rank");
    Shape shape(rank);
    std::uint64_t volume = 1;
    for (auto& e : shape) {
      e = r.u32();
      if (e == 0) r.fail("zero extent");
      volume *= e;
    }
    if (volume * 8 > r.remaining()) r.fail("tensor data truncated");
    std::vector<double> values(volume);
    for (double& v : values) v = r.f64();
    tensors.emplace(std::move(name), Tensor<double>(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) r.fail("trailing bytes");

  TrainerState<T> state;
  state.params = CaeParams<T>::zeros(arch);
  auto take = [&](const std::string& name, Tensor<T>& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw Error(ErrorKind::kCorruptStream, "checkpoint: missing tensor " + name);
    }
    if (it->second.shape() != dst.shape()) {
      throw Error(ErrorKind::kShapeMismatch,
                  "checkpoint tensor " + name + " has shape " +
                      shape_string(it->second.shape()) + ", expected " +
                      shape_string(dst.shape()));
    }
    dst = tensor_cast<T>(it->second);
  };
  state.params.for_each_tensor(
      [&](const std::string& name, Tensor<T>& t) { take(name, t); });

  if (tensors.contains("adam.step")) {
    state.iteration =
        static_cast<std::uint64_t>(tensors.at("train.iteration")[0]);
    const auto step = static_cast<std::uint64_t>(tensors.at("adam.step")[0]);
    state.params.for_each_tensor([&](const std::string& name, const Tensor<T>& t) {
      AdamState<T> s = AdamState<T>::zeros_like(t, learning_rate);
      take("adam.m." + name, s.first_moment);
      take("adam.v." + name, s.second_moment);
      s.step_count = step;
      state.optimizer.push_back(std::move(s));
    });
  }
  return state;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const TrainerState<T>& state) {
  write_file_atomic(path, serialize_checkpoint(state));
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const CaeParams<T>& params) {
  write_file_atomic(path, serialize_checkpoint(params));
}

template <typename T>
TrainerState<T> load_checkpoint(const std::filesystem::path& path,
                                double learning_rate = 1e-4) {
  return parse_checkpoint<T>(read_file(path), learning_rate);
}

}  // namespace cae

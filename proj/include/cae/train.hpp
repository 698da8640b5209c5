// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cae/checkpoint.hpp"
#include "cae/network.hpp"
#include "cae/rng.hpp"

namespace cae {

struct TrainConfig {
  double lambda = 1.0;
  double noise_halfwidth = 1.0 / 1024.0;
  std::size_t batch_size = 16;
  std::uint64_t max_iterations = 2000;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  std::uint64_t checkpoint_interval = 1000;

  void validate() const {
    if (!(noise_halfwidth > 0.0) || !std::isfinite(noise_halfwidth)) {
      throw Error(ErrorKind::kInvalidArgument, "noise_halfwidth must be > 0");
    }
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
      throw Error(ErrorKind::kInvalidArgument, "lambda must be >= 0");
    }
    if (batch_size == 0) {
      throw Error(ErrorKind::kInvalidArgument, "batch_size must be positive");
    }
    if (!(learning_rate > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "learning_rate must be > 0");
    }
    if (checkpoint_interval == 0) {
      throw Error(ErrorKind::kInvalidArgument,
                  "checkpoint_interval must be positive");
    }
  }
};

struct LossRecord {
  std::uint64_t iteration = 0;
  LossTerms terms;
};

template <typename T>
struct TrainResult {
  TrainerState<T> state;
  std::vector<LossRecord> history;
  std::vector<std::uint64_t> checkpoint_iterations;
};

// Rate-distortion loss for one batch; noise is drawn from `rng`.
template <typename T>
LossResult<T> loss(const CaeParams<T>& params, const Tensor<T>& batch,
                   const TrainConfig& config, Rng& rng,
                   std::size_t threads = 0) {
  const CaeArchitecture& arch = params.architecture;
  const Tensor<T> noise = uniform_noise<T>(
      {batch.extent(0), arch.latent_channels(), arch.latent_extent(),
       arch.latent_extent()},
      config.noise_halfwidth, rng);
  LossResult<T> result =
      loss_and_gradients(params, batch, noise, config.lambda, threads);
  if (!std::isfinite(result.terms.total)) {
    throw Error(ErrorKind::kNonFinite, "loss is not finite");
  }
  return result;
}

namespace detail {

// Stacks the selected (1, 1, P, P) patches into one (B, 1, P, P) batch.
template <typename T>
Tensor<T> gather_batch(const std::vector<Tensor<T>>& patches,
                       const std::vector<std::size_t>& indices) {
  Shape shape = patches.front().shape();
  shape[0] = indices.size();
  std::vector<T> data;
  data.reserve(shape_volume(shape));
  for (std::size_t i : indices) {
    const auto v = patches[i].values();
    data.insert(data.end(), v.begin(), v.end());
  }
  return Tensor<T>(std::move(shape), std::move(data));
}

// Distinct indices drawn uniformly without replacement.
inline std::vector<std::size_t> sample_indices(std::size_t population,
                                               std::size_t count, Rng& rng) {
  std::vector<std::size_t> order(population);
  for (std::size_t i = 0; i < population; ++i) order[i] = i;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(population - i));
    std::swap(order[i], order[j]);
  }
  order.resize(count);
  return order;
}

}  // namespace detail

// Adam training of the autoencoder on a fixed list of (1, 1, P, P) patches.
// Each iteration draws its batch and noise from a stream derived from
// (seed, iteration), so a run resumed from a checkpoint reproduces the loss
// history of an uninterrupted run. When `checkpoint_path` is set the state is
// written there every checkpoint_interval iterations and at the end.
template <typename T>
TrainResult<T> train(const std::vector<Tensor<T>>& patches,
                     const TrainConfig& config, TrainerState<T> state,
                     const std::optional<std::filesystem::path>& checkpoint_path =
                         std::nullopt,
                     std::size_t threads = 0) {
  config.validate();
  if (patches.empty()) {
    throw Error(ErrorKind::kEmptyDataset, "no training patches");
  }
  if (patches.size() < config.batch_size) {
    throw Error(ErrorKind::kEmptyDataset,
                "dataset has " + std::to_string(patches.size()) +
                    " patches, fewer than batch_size " +
                    std::to_string(config.batch_size));
  }
  const std::size_t p = state.params.architecture.patch_size;
  for (const Tensor<T>& patch : patches) {
    if (patch.shape() != Shape{1, 1, p, p}) {
      throw Error(ErrorKind::kShapeMismatch,
                  "training patch " + shape_string(patch.shape()) +
                      " does not match patch_size " + std::to_string(p));
    }
  }
  if (state.optimizer.empty()) {
    state = TrainerState<T>::fresh(std::move(state.params), config.learning_rate);
  }
  for (AdamState<T>& s : state.optimizer) s.learning_rate = config.learning_rate;

  TrainResult<T> result;
  std::optional<std::uint64_t> last_checkpoint;
  auto write_checkpoint = [&] {
    if (!checkpoint_path) return;
    save_checkpoint(*checkpoint_path, state);
    last_checkpoint = state.iteration;
    result.checkpoint_iterations.push_back(state.iteration);
  };

  while (state.iteration < config.max_iterations) {
    Rng rng = Rng::derive(config.seed, state.iteration);
    const auto indices =
        detail::sample_indices(patches.size(), config.batch_size, rng);
    const Tensor<T> batch = detail::gather_batch(patches, indices);
    LossResult<T> step;
    try {
      step = loss(state.params, batch, config, rng, threads);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "iteration " << state.iteration << ": " << e.what();
      if (last_checkpoint) {
        msg << "; last good checkpoint " << checkpoint_path->string()
            << " at iteration " << *last_checkpoint;
      } else {
        msg << "; no checkpoint written yet";
      }
      throw Error(e.kind(), msg.str());
    }
    result.history.push_back({state.iteration, step.terms});

    std::size_t k = 0;
    std::vector<const Tensor<T>*> grads;
    step.gradients.for_each_tensor(
        [&](const std::string&, const Tensor<T>& g) { grads.push_back(&g); });
    state.params.for_each_tensor([&](const std::string& name, Tensor<T>& t) {
      adam_step(t, *grads[k], state.optimizer[k], name);
      ++k;
    });
    ++state.iteration;
    if (state.iteration % config.checkpoint_interval == 0) write_checkpoint();
  }
  if (checkpoint_path &&
      (!last_checkpoint || *last_checkpoint != state.iteration)) {
    write_checkpoint();
  }
  result.state = std::move(state);
  return result;
}

inline std::string loss_history_csv(const std::vector<LossRecord>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,J,mse_term,rate_term\n";
  for (const LossRecord& r : history) {
    out << r.iteration << ',' << r.terms.total << ',' << r.terms.distortion
        << ',' << r.terms.rate << '\n';
  }
  return out.str();
}

}  // namespace cae

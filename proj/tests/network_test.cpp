// Copyright 2026 The caecodec Authors
// SPDX-License-Identifier: Apache-2.0

#include "cae/network.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "cae/train.hpp"
#include "test_util.hpp"

namespace cae {
namespace {

using test::random_tensor;
using test::relative_error;

CaeArchitecture tiny_arch(std::size_t patch = 8) {
  CaeArchitecture arch;
  arch.filter_counts = {2, 2, 2, 2, 2, 2};
  arch.patch_size = patch;
  return arch;
}

// Randomizes every tensor, including biases and slopes, so no gradient path
// is trivially zero.
CaeParams<double> random_params(const CaeArchitecture& arch, Rng& rng) {
  auto p = CaeParams<double>::initialize(arch, rng.next_u64());
  p.for_each_tensor([&](const std::string& name, Tensor<double>& t) {
    const bool slope = name.ends_with(".prelu");
    for (double& v : t.values()) {
      v = slope ? rng.uniform(0.05, 0.5) : v + rng.uniform(-0.2, 0.2);
    }
  });
  return p;
}

TEST(Encode, LatentShape) {
  CaeArchitecture arch;  // {32,32,64,64,64,32}, 128
  arch.filter_counts = {4, 4, 4, 4, 4, 32};
  const auto p = CaeParams<double>::initialize(arch, 1);
  const auto y = encode(p, Tensor<double>({2, 1, 128, 128}, 0.5));
  EXPECT_EQ(y.shape(), (Shape{2, 32, 16, 16}));
}

TEST(Encode, ZeroPatchZeroBiasGivesZeroLatent) {
  const auto p = CaeParams<double>::initialize(tiny_arch(16), 3);
  const auto y = encode(p, Tensor<double>({1, 1, 16, 16}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Encode, WrongPatchSize) {
  const auto p = CaeParams<double>::initialize(tiny_arch(16), 3);
  try {
    encode(p, Tensor<double>({1, 1, 8, 8}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShapeMismatch);
  }
}

TEST(Encode, Deterministic) {
  const auto p = CaeParams<double>::initialize(tiny_arch(16), 5);
  Rng rng(1);
  const auto x = random_tensor({1, 1, 16, 16}, rng, 0.0, 1.0);
  EXPECT_EQ(encode(p, x), encode(CaeParams<double>::initialize(tiny_arch(16), 5), x));
}

TEST(Decode, ShapeRoundTripForEveryEvenPatchSize) {
  for (std::size_t patch : {8u, 16u, 24u, 32u, 64u}) {
    const auto p = CaeParams<double>::initialize(tiny_arch(patch), patch);
    const Tensor<double> x({2, 1, patch, patch}, 0.25);
    EXPECT_EQ(decode(p, encode(p, x)).shape(), x.shape());
  }
}

TEST(Decode, ZeroLatentZeroBiasGivesZeroPlane) {
  const auto p = CaeParams<double>::initialize(tiny_arch(16), 8);
  const auto out = decode(p, Tensor<double>({1, 2, 2, 2}));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Decode, WrongLatentShape) {
  const auto p = CaeParams<double>::initialize(tiny_arch(16), 8);
  EXPECT_THROW(decode(p, Tensor<double>({1, 3, 2, 2})), Error);
}

TEST(Decode, Deterministic) {
  Rng rng(2);
  const auto p = random_params(tiny_arch(16), rng);
  const auto y = random_tensor({1, 2, 2, 2}, rng);
  EXPECT_EQ(decode(p, y), decode(p, y));
}

TEST(Loss, ZeroWhenDecoderReproducesConstantPatch) {
  auto p = CaeParams<double>::zeros(tiny_arch());
  p.decoder.back().bias.fill(0.375);
  const Tensor<double> x({1, 1, 8, 8}, 0.375);
  const auto r = loss_and_gradients(p, x, Tensor<double>({1, 2, 1, 1}), 0.0);
  EXPECT_EQ(r.terms.total, 0.0);
}

TEST(Loss, RateTermVanishesForZeroEncoder) {
  Rng rng(4);
  auto p = random_params(tiny_arch(), rng);
  for (auto& layer : p.encoder) {
    layer.kernels.fill(0.0);
    layer.bias.fill(0.0);
  }
  const auto x = random_tensor({2, 1, 8, 8}, rng, 0.0, 1.0);
  const auto mu = uniform_noise<double>({2, 2, 1, 1}, 1.0 / 1024, rng);
  const auto r = loss_and_gradients(p, x, mu, 1.0);
  const auto x_hat = decode(p, mu);
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mse += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
  mse /= static_cast<double>(x.size());
  EXPECT_EQ(r.terms.rate, 0.0);
  EXPECT_NEAR(r.terms.total, mse, 1e-15);
}

TEST(Loss, LambdaZeroIsDistortionOnly) {
  Rng rng(6);
  const auto p = random_params(tiny_arch(), rng);
  const auto x = random_tensor({2, 1, 8, 8}, rng, 0.0, 1.0);
  const auto mu = uniform_noise<double>({2, 2, 1, 1}, 1.0 / 1024, rng);
  const auto r = loss_and_gradients(p, x, mu, 0.0);
  EXPECT_EQ(r.terms.total, r.terms.distortion);
  EXPECT_GT(r.terms.rate, 0.0);
  EXPECT_EQ(loss_value(p, x, mu, 0.0).total, r.terms.total);
}

TEST(Loss, GradientMatchesFiniteDifferencesOverAllParameters) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(1000 + seed);
    auto p = random_params(tiny_arch(), rng);
    const auto x = random_tensor({2, 1, 8, 8}, rng, 0.0, 1.0);
    const auto mu = uniform_noise<double>({2, 2, 1, 1}, 1.0 / 1024, rng);
    const auto r = loss_and_gradients(p, x, mu, 1.0);
    // Flatten analytic and numeric gradients over every tensor.
    std::vector<double> analytic, numeric;
    std::vector<const Tensor<double>*> grads;
    r.gradients.for_each_tensor(
        [&](const std::string&, const Tensor<double>& g) { grads.push_back(&g); });
    std::size_t k = 0;
    p.for_each_tensor([&](const std::string&, Tensor<double>& t) {
      auto f = [&] { return loss_value(p, x, mu, 1.0).total; };
      const auto n = test::numeric_gradient(f, t);
      analytic.insert(analytic.end(), grads[k]->values().begin(), grads[k]->values().end());
      numeric.insert(numeric.end(), n.values().begin(), n.values().end());
      ++k;
    });
    const Tensor<double> a({analytic.size()}, analytic), n({numeric.size()}, numeric);
    EXPECT_LT(relative_error(a, n), 1e-4) << "seed " << seed;
  }
}

TEST(Loss, ThreadCountDoesNotChangeResult) {
  Rng rng(12);
  const auto p = random_params(tiny_arch(16), rng);
  const auto x = random_tensor({4, 1, 16, 16}, rng, 0.0, 1.0);
  const auto mu = uniform_noise<double>({4, 2, 2, 2}, 1.0 / 1024, rng);
  const auto one = loss_and_gradients(p, x, mu, 1.0, 1);
  const auto many = loss_and_gradients(p, x, mu, 1.0, 4);
  EXPECT_EQ(one.terms.total, many.terms.total);
  EXPECT_EQ(one.gradients.decoder[0].kernels, many.gradients.decoder[0].kernels);
}

TEST(Noise, StatisticsAndBounds) {
  Rng rng(77);
  const double half = 1.0 / 1024.0;
  const auto mu = uniform_noise<double>({1000000}, half, rng);
  double mean = 0.0, max_abs = 0.0;
  for (double v : mu.values()) {
    mean += v;
    max_abs = std::max(max_abs, std::abs(v));
  }
  mean /= 1e6;
  const double sigma_of_mean = half / std::sqrt(3.0) / 1000.0;
  EXPECT_LT(std::abs(mean), 3.0 * sigma_of_mean);
  EXPECT_LE(max_abs, half);
}

std::vector<Tensor<double>> smooth_patches(std::size_t count, std::size_t patch,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Tensor<double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double fx = rng.uniform(0.5, 3.0), fy = rng.uniform(0.5, 3.0);
    const double phase = rng.uniform(0.0, 6.28), base = rng.uniform(0.3, 0.7);
    Tensor<double> t({1, 1, patch, patch});
    for (std::size_t y = 0; y < patch; ++y)
      for (std::size_t x = 0; x < patch; ++x)
        t(0, 0, y, x) = base + 0.25 * std::sin(fx * x / patch * 6.28 +
                                               fy * y / patch * 6.28 + phase);
    out.push_back(std::move(t));
  }
  return out;
}

TEST(Train, ZeroIterationsReturnsInitialParams) {
  const auto init = CaeParams<double>::initialize(tiny_arch(16), 1);
  TrainConfig config;
  config.max_iterations = 0;
  config.batch_size = 2;
  const auto r = train(smooth_patches(4, 16, 1), config,
                       TrainerState<double>::fresh(init, config.learning_rate));
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(serialize_checkpoint(r.state.params), serialize_checkpoint(init));
}

TEST(Train, EmptyDatasetIsAnError) {
  TrainConfig config;
  config.batch_size = 1;
  try {
    train(std::vector<Tensor<double>>{}, config,
          TrainerState<double>::fresh(CaeParams<double>::initialize(tiny_arch(), 1), 1e-4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyDataset);
  }
}

TEST(Train, SeededRunsAreIdentical) {
  TrainConfig config;
  config.max_iterations = 30;
  config.batch_size = 3;
  config.seed = 42;
  const auto patches = smooth_patches(6, 16, 2);
  auto run = [&] {
    return train(patches, config,
                 TrainerState<double>::fresh(
                     CaeParams<double>::initialize(tiny_arch(16), 9), 1e-4));
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.history.size(), 30u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].terms.total, b.history[i].terms.total);
  }
}

TEST(Train, ResumeFromCheckpointMatchesUninterruptedRun) {
  const auto dir = std::filesystem::temp_directory_path() / "cae_resume_test";
  std::filesystem::create_directories(dir);
  const auto ckpt = dir / "state.caep";
  TrainConfig config;
  config.batch_size = 2;
  config.seed = 3;
  config.checkpoint_interval = 10;
  const auto patches = smooth_patches(5, 16, 4);
  const auto init = TrainerState<double>::fresh(
      CaeParams<double>::initialize(tiny_arch(16), 10), 1e-4);

  config.max_iterations = 25;
  const auto full = train(patches, config, init);

  config.max_iterations = 10;
  const auto first = train(patches, config, init, ckpt);
  EXPECT_EQ(first.checkpoint_iterations, std::vector<std::uint64_t>{10});
  config.max_iterations = 25;
  const auto resumed = train(patches, config, load_checkpoint<double>(ckpt));
  ASSERT_EQ(resumed.history.size(), 15u);
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(resumed.history[i].iteration, full.history[10 + i].iteration);
    EXPECT_EQ(resumed.history[i].terms.total, full.history[10 + i].terms.total);
  }
  EXPECT_EQ(serialize_checkpoint(resumed.state), serialize_checkpoint(full.state));
  std::filesystem::remove_all(dir);
}

TEST(Train, SinglePatchOverfits) {
  TrainConfig config;
  config.max_iterations = 500;
  config.batch_size = 1;
  const auto patches = smooth_patches(1, 16, 5);
  const auto r = train(patches, config,
                       TrainerState<double>::fresh(
                           CaeParams<double>::initialize(tiny_arch(16), 6), 1e-4));
  EXPECT_LT(r.history.back().terms.total, r.history.front().terms.total);
}

TEST(Checkpoint, RoundTripPreservesParamsAndModelId) {
  const auto p = CaeParams<double>::initialize(tiny_arch(16), 21);
  const auto bytes = serialize_checkpoint(p);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CAEP");
  const auto back = parse_checkpoint<double>(bytes);
  EXPECT_EQ(serialize_checkpoint(back.params), bytes);
  EXPECT_EQ(model_id(back.params), model_id(p));
  EXPECT_TRUE(back.optimizer.empty());
}

TEST(Checkpoint, RejectsCorruption) {
  auto bytes = serialize_checkpoint(CaeParams<double>::initialize(tiny_arch(), 1));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(parse_checkpoint<double>(bad_magic), Error);
  auto bad_version = bytes;
  bad_version[4] = 9;
  try {
    parse_checkpoint<double>(bad_version);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUnsupportedVersion);
  }
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(parse_checkpoint<double>(bytes), Error);
}

TEST(LossHistory, CsvLayout) {
  std::vector<LossRecord> h{{0, {1.5, 1.0, 0.5}}, {1, {1.25, 1.0, 0.25}}};
  EXPECT_EQ(loss_history_csv(h),
            "iteration,J,mse_term,rate_term\n0,1.5,1,0.5\n1,1.25,1,0.25\n");
}

}  // namespace
}  // namespace cae

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gradcheck.hpp"
#include "phasenet/model.hpp"
#include "phasenet/network.hpp"

namespace phasenet {
namespace {

// Parameter count of one block written out from the layer list.
std::size_t block_parameters(int in, int feat, int out, int k) {
  const std::size_t conv1 = static_cast<std::size_t>(k) * k * in * feat + feat;
  const std::size_t conv2 = static_cast<std::size_t>(k) * k * feat * feat + feat;
  const std::size_t norms = 4 * static_cast<std::size_t>(feat);
  const std::size_t head = static_cast<std::size_t>(feat) * out + out;
  return conv1 + conv2 + norms + head;
}

NetworkInput random_input(const NetworkConfig& c, const std::vector<Extent>& schedule, int blocks, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  NetworkInput in;
  for (int b = 0; b < blocks; ++b) {
    Tensor t(c.pyramid_channels(b), schedule[b].height, schedule[b].width);
    for (double& v : t.data) v = u(rng);
    in.levels.push_back(std::move(t));
  }
  return in;
}

std::vector<Extent> schedule_for(int levels, int side) {
  PyramidConfig p;
  p.levels = levels;
  return resolution_schedule(p, {side, side});
}

TEST(Architecture, BaseModelLayout) {
  const NetworkConfig c;  // 10 levels, 4 orientations, width 64
  const Network net(c, 1);
  ASSERT_EQ(net.blocks(), 11);
  EXPECT_EQ(net.block(0).in_channels, 2);
  EXPECT_EQ(net.block(1).in_channels, 81);
  for (int b = 2; b < 11; ++b) EXPECT_EQ(net.block(b).in_channels, 88) << b;
  EXPECT_EQ(net.block(0).out_channels, 1);
  for (int b = 1; b < 11; ++b) EXPECT_EQ(net.block(b).out_channels, 8) << b;
  for (int b = 0; b < 11; ++b) {
    EXPECT_EQ(net.block(b).features, 64);
    EXPECT_EQ(net.block(b).kernel, b < 3 ? 1 : 3) << b;
  }
}

TEST(Architecture, TopThreeBlocksShareOneGroup) {
  const Network net(NetworkConfig{}, 1);
  EXPECT_EQ(net.groups(), 9);
  EXPECT_EQ(net.group_of(8), net.group_of(9));
  EXPECT_EQ(net.group_of(9), net.group_of(10));
  EXPECT_EQ(&net.block(8), &net.block(10));
  for (int b = 0; b < 8; ++b) {
    EXPECT_EQ(net.group_of(b), b);
    EXPECT_FALSE(net.shared(b));
  }
  EXPECT_TRUE(net.shared(8) && net.shared(9) && net.shared(10));
}

TEST(Architecture, SharingRuleForSmallPyramids) {
  NetworkConfig c;
  c.levels = 6;
  EXPECT_EQ(c.shared_from(), 4);
  c.levels = 4;
  EXPECT_EQ(c.shared_from(), 3);
  c.levels = 3;
  EXPECT_EQ(c.shared_from(), 3);  // only blocks 3 shares with itself
  c.levels = 1;
  EXPECT_EQ(c.shared_from(), 2);  // nothing shared
  const Network tiny(c, 1);
  EXPECT_EQ(tiny.groups(), 2);
}

TEST(Architecture, ParameterCountMatchesLayerArithmetic) {
  const NetworkConfig c;
  const Network net(c, 1);
  std::size_t expected = block_parameters(2, 64, 1, 1) + block_parameters(81, 64, 8, 1) + block_parameters(88, 64, 8, 1);
  expected += 6 * block_parameters(88, 64, 8, 3);  // blocks 3..7 and the shared group
  EXPECT_EQ(net.parameter_count(), expected);
  EXPECT_EQ(net.parameter_count(), 556225u);
}

TEST(Architecture, RejectsInvalidConfigs) {
  NetworkConfig c;
  c.levels = 0;
  EXPECT_THROW(Network(c, 1), std::invalid_argument);
  c = NetworkConfig{};
  c.features = 0;
  EXPECT_THROW(Network(c, 1), std::invalid_argument);
  c = NetworkConfig{};
  c.orientations = 0;
  EXPECT_THROW(Network(c, 1), std::invalid_argument);
}

TEST(Network, SeededInitializationIsReproducible) {
  NetworkConfig c;
  c.levels = 4;
  c.features = 8;
  EXPECT_EQ(Network(c, 5), Network(c, 5));
  EXPECT_NE(Network(c, 5), Network(c, 6));
  const Network net(c, 5);
  for (int g = 0; g < net.groups(); ++g) {
    for (double v : net.group(g).conv1_bias) EXPECT_EQ(v, 0.0);
    for (double v : net.group(g).norm1_scale) EXPECT_EQ(v, 1.0);
    for (double v : net.group(g).norm2_variance) EXPECT_EQ(v, 1.0);
  }
}

TEST(Network, PredictShapesAndRange) {
  NetworkConfig c;
  c.levels = 6;
  c.features = 8;
  const Network net(c, 2);
  const auto schedule = schedule_for(6, 64);
  const RawPrediction raw = net.predict(random_input(c, schedule, 7, 3));
  ASSERT_EQ(raw.levels.size(), 7u);
  for (int b = 0; b < 7; ++b) {
    EXPECT_EQ(raw.levels[b].channels, c.prediction_channels(b));
    EXPECT_EQ(raw.levels[b].height, schedule[b].height);
    EXPECT_EQ(raw.levels[b].width, schedule[b].width);
    for (double v : raw.levels[b].data) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Network, PrefixOfBlocksDoesNotDependOnLaterBlocks) {
  NetworkConfig c;
  c.levels = 4;
  c.features = 8;
  const Network net(c, 2);
  const auto schedule = schedule_for(4, 24);
  const NetworkInput full = random_input(c, schedule, 5, 4);
  NetworkInput prefix = full;
  prefix.levels.resize(3);
  const RawPrediction a = net.predict(full), b = net.predict(prefix);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(a.levels[i], b.levels[i]);
}

TEST(Network, ZeroHeadsGiveZeroPrediction) {
  NetworkConfig c;
  c.levels = 3;
  c.features = 4;
  Network net(c, 2);
  for (int g = 0; g < net.groups(); ++g) std::fill(net.group(g).head_weight.begin(), net.group(g).head_weight.end(), 0.0);
  const RawPrediction raw = net.predict(random_input(c, schedule_for(3, 16), 4, 1));
  for (const auto& t : raw.levels)
    for (double v : t.data) EXPECT_EQ(v, 0.0);
}

TEST(Network, RejectsMalformedInput) {
  NetworkConfig c;
  c.levels = 3;
  c.features = 4;
  const Network net(c, 2);
  NetworkInput in = random_input(c, schedule_for(3, 16), 4, 1);
  NetworkInput extra = in;
  extra.levels.push_back(extra.levels.back());
  EXPECT_THROW(net.predict(extra), std::invalid_argument);
  in.levels[2] = Tensor(15, in.levels[2].height, in.levels[2].width);
  EXPECT_THROW(net.predict(in), std::invalid_argument);
}

TEST(Network, EvalForwardIsDeterministic) {
  NetworkConfig c;
  c.levels = 5;
  c.features = 16;
  const Network net(c, 9);
  const NetworkInput in = random_input(c, schedule_for(5, 48), 6, 2);
  const RawPrediction a = net.predict(in), b = net.predict(in);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(a.levels[i], b.levels[i]);
}

TEST(Network, TrainForwardUpdatesOnlySelectedRunningStats) {
  NetworkConfig c;
  c.levels = 3;
  c.features = 4;
  Network net(c, 2);
  const Network before = net;
  const auto schedule = schedule_for(3, 16);
  std::vector<NetworkInput> batch{random_input(c, schedule, 4, 1), random_input(c, schedule, 4, 2)};
  net.forward(batch, Mode::train, 4, nullptr, {true, false, true, false});
  EXPECT_NE(net.group(0).norm1_mean, before.group(0).norm1_mean);
  EXPECT_EQ(net.group(1).norm1_mean, before.group(1).norm1_mean);
  EXPECT_EQ(net.group(3).norm2_variance, before.group(3).norm2_variance);
  EXPECT_EQ(net.group(0).conv1_weight, before.group(0).conv1_weight);
}

TEST(Extension, AddsAliasesOfTheSharedGroup) {
  NetworkConfig c;
  c.levels = 6;
  c.features = 8;
  const Network net(c, 3);
  const Network big = net.extended(9);
  EXPECT_EQ(big.blocks(), 10);
  EXPECT_EQ(big.groups(), net.groups());
  EXPECT_EQ(big.parameter_count(), net.parameter_count());
  for (int b = 7; b < 10; ++b) EXPECT_EQ(big.group_of(b), net.group_of(6));
  EXPECT_EQ(net.extended(6), net);
  EXPECT_THROW(net.extended(5), std::invalid_argument);

  c.levels = 1;
  EXPECT_THROW(Network(c, 1).extended(3), std::invalid_argument);
}

TEST(Extension, BaseSizeOutputsAreBitwiseUnchanged) {
  NetworkConfig c;
  c.levels = 4;
  c.features = 8;
  const Network net(c, 3);
  const Network big = net.extended(8);
  const NetworkInput in = random_input(c, schedule_for(4, 32), 5, 6);
  const RawPrediction a = net.predict(in), b = big.predict(in);
  ASSERT_EQ(a.levels.size(), b.levels.size());
  for (std::size_t i = 0; i < a.levels.size(); ++i) EXPECT_EQ(a.levels[i], b.levels[i]);

  // Larger inputs reach the extra blocks.
  const RawPrediction full = big.predict(random_input(c, schedule_for(8, 128), 9, 7));
  EXPECT_EQ(full.levels.size(), 9u);
  EXPECT_EQ(full.levels.back().height, 128);
}

TEST(Backward, ParameterGradientsMatchFiniteDifferences) {
  auto toy = testing::make_toy_problem(11);
  NetworkConfig c = network_config_for(toy.pyramid, 6);
  Network net(c, 5);
  const auto r = testing::check_parameter_gradients(net, toy.batch, net.blocks(), LossConfig{}, toy.bank, 60, 17);
  EXPECT_GE(r.checked, 50);
  EXPECT_EQ(r.passed, r.checked) << "worst relative error " << r.worst;
  EXPECT_LT(r.skipped_kinks, 10);
}

TEST(Backward, StageOneGradientsMatchFiniteDifferences) {
  auto toy = testing::make_toy_problem(12);
  Network net(network_config_for(toy.pyramid, 6), 5);
  const auto r = testing::check_parameter_gradients(net, toy.batch, 2, LossConfig{}, toy.bank, 30, 18);
  EXPECT_GE(r.checked, 25);
  EXPECT_EQ(r.passed, r.checked) << "worst relative error " << r.worst;
}

TEST(Backward, BlocksOutsideTheStageGetNoGradient) {
  auto toy = testing::make_toy_problem(13);
  Network net(network_config_for(toy.pyramid, 6), 5);
  NetworkGradients g = net.zero_gradients();
  evaluate_batch(net, toy.batch, 2, LossConfig{}, toy.bank, &g, std::vector<bool>(net.groups(), false));
  for (int grp = 0; grp < net.groups(); ++grp) {
    double norm = 0.0;
    for (const auto& v : g.groups[grp].values)
      for (double x : v) norm += std::abs(x);
    if (grp < 2) EXPECT_GT(norm, 0.0) << grp;
    else EXPECT_EQ(norm, 0.0) << grp;
  }
}

TEST(Backward, InputGradientsMatchFiniteDifferences) {
  NetworkConfig c;
  c.levels = 3;
  c.features = 4;
  Network net(c, 8);
  const auto schedule = schedule_for(3, 16);
  std::vector<NetworkInput> batch{random_input(c, schedule, 4, 1), random_input(c, schedule, 4, 2)};
  std::vector<RawPrediction> weights;
  for (int s = 0; s < 2; ++s) {
    RawPrediction w;
    for (int b = 0; b < 4; ++b) {
      Tensor t(c.prediction_channels(b), schedule[b].height, schedule[b].width);
      std::mt19937_64 rng(100 + 10 * s + b);
      std::normal_distribution<double> g;
      for (double& v : t.data) v = g(rng);
      w.levels.push_back(std::move(t));
    }
    weights.push_back(std::move(w));
  }
  const std::vector<bool> keep(net.groups(), false);
  auto loss = [&](const std::vector<NetworkInput>& in) {
    const auto out = net.forward(in, Mode::train, 4, nullptr, keep);
    double l = 0.0;
    for (int s = 0; s < 2; ++s)
      for (int b = 0; b < 4; ++b)
        for (std::size_t i = 0; i < out[s].levels[b].size(); ++i) l += out[s].levels[b].data[i] * weights[s].levels[b].data[i];
    return l;
  };
  TrainTape tape;
  net.forward(batch, Mode::train, 4, &tape, keep);
  NetworkGradients grads = net.zero_gradients();
  std::vector<NetworkInput> gin;
  net.backward(tape, weights, grads, &gin);
  std::mt19937_64 rng(3);
  for (int k = 0; k < 40; ++k) {
    const int s = static_cast<int>(rng() % 2), b = static_cast<int>(rng() % 4);
    const std::size_t i = rng() % batch[s].levels[b].size();
    auto up = batch, down = batch;
    up[s].levels[b].data[i] += 1e-6;
    down[s].levels[b].data[i] -= 1e-6;
    const double fd = (loss(up) - loss(down)) / 2e-6;
    EXPECT_NEAR(gin[s].levels[b].data[i], fd, 1e-6 + 1e-4 * std::abs(fd)) << s << " " << b << " " << i;
  }
}

}  // namespace
}  // namespace phasenet

#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "phasenet/checkpoint.hpp"
#include "phasenet/model.hpp"
#include "phasenet/synthetic.hpp"
#include "phasenet/trainer.hpp"
#include "test_support.hpp"

namespace phasenet {
namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.pyramid.levels = 3;
  c.features = 4;
  c.patch = 16;
  c.batch_sizes = {3};
  c.epochs = {1};
  c.seed = 7;
  return c;
}

TripletDataset tiny_data() {
  SyntheticConfig s;
  s.size = 20;
  s.count = 6;
  s.max_shift = 3.0;
  return synthetic_dataset(s);
}

/// Restores the OpenMP thread count on scope exit.
class SingleThread {
 public:
  SingleThread() : saved_(omp_get_max_threads()) { omp_set_num_threads(1); }
  ~SingleThread() { omp_set_num_threads(saved_); }

 private:
  int saved_;
};

void expect_same_state(const TrainState& a, const TrainState& b) {
  EXPECT_EQ(a.config, b.config);
  EXPECT_EQ(a.network, b.network);
  EXPECT_EQ(a.optimizer, b.optimizer);
  EXPECT_EQ(a.stages_completed, b.stages_completed);
  EXPECT_EQ(a.rng, b.rng);
}

TEST(PlanStages, OneStagePerDistinctGroup) {
  auto trained = [](int levels) {
    NetworkConfig c;
    c.levels = levels;
    c.features = 2;
    std::vector<int> m;
    for (const Stage& s : plan_stages(Network(c, 1))) m.push_back(s.trained_blocks);
    return m;
  };
  EXPECT_EQ(trained(10), (std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 11}));
  EXPECT_EQ(trained(6), (std::vector<int>{1, 2, 3, 4, 7}));
  EXPECT_EQ(trained(4), (std::vector<int>{1, 2, 3, 5}));
  EXPECT_EQ(trained(1), (std::vector<int>{1, 2}));

  NetworkConfig c;
  c.features = 2;
  const auto stages = plan_stages(Network(c, 1));
  for (std::size_t i = 0; i < stages.size(); ++i) {
    EXPECT_EQ(stages[i].index, static_cast<int>(i));
    EXPECT_EQ(stages[i].new_groups, std::vector<int>{static_cast<int>(i)});
  }
}

TEST(TrainConfig, DefaultScheduleAndBroadcast) {
  TrainConfig c;
  EXPECT_EQ(c.batch_size(0, 9), 32);
  EXPECT_EQ(c.batch_size(6, 9), 32);
  EXPECT_EQ(c.batch_size(7, 9), 16);
  EXPECT_EQ(c.batch_size(8, 9), 12);
  EXPECT_EQ(c.epoch_count(6, 9), 12);
  EXPECT_EQ(c.epoch_count(7, 9), 6);
  EXPECT_EQ(c.epoch_count(8, 9), 6);
  c.batch_sizes = {5};
  EXPECT_EQ(c.batch_size(8, 9), 5);
  c.batch_sizes = {1, 2};
  EXPECT_THROW(c.batch_size(0, 9), std::invalid_argument);
  c.batch_sizes = {0};
  EXPECT_THROW(c.validate(), std::invalid_argument);

  const TrainConfig d = desk_profile();
  EXPECT_EQ(d.pyramid.levels, 6);
  EXPECT_EQ(d.patch, 64);
  EXPECT_NO_THROW(d.validate());
}

class SpliceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg.levels = 3;
    bank = std::make_unique<FilterBank>(cfg, Extent{16, 16});
    truth = decompose(testing::random_grid(16, 16, 1), *bank);
    pred = decompose(testing::random_grid(16, 16, 2), *bank);
  }
  PyramidConfig cfg;
  std::unique_ptr<FilterBank> bank;
  Decomposition truth, pred;
};

TEST_F(SpliceTest, ReplacesOnlyTrainedBlocks) {
  const Decomposition none = splice(pred, truth, 0);
  EXPECT_EQ(none.low_pass, truth.low_pass);
  EXPECT_EQ(none.high_pass, truth.high_pass);

  const Decomposition two = splice(pred, truth, 2);
  EXPECT_EQ(two.low_pass, pred.low_pass);
  EXPECT_EQ(two.bands[0][1].values, pred.bands[0][1].values);
  EXPECT_EQ(two.bands[1][1].values, truth.bands[1][1].values);
  EXPECT_EQ(two.bands[2][3].values, truth.bands[2][3].values);
  EXPECT_EQ(two.high_pass, truth.high_pass);

  const Decomposition all = splice(pred, truth, 4);
  EXPECT_EQ(all.bands[2][0].values, pred.bands[2][0].values);
  for (double v : all.high_pass) EXPECT_EQ(v, 0.0);

  EXPECT_THROW(splice(pred, truth, 5), std::invalid_argument);
  EXPECT_THROW(splice(pred, truth, -1), std::invalid_argument);
}

TEST_F(SpliceTest, GroundTruthSplicingReproducesTarget) {
  const RealGrid image = testing::random_grid(16, 16, 1);
  for (int m = 0; m < 4; ++m)
    EXPECT_LT(testing::relative_l2(hybrid_reconstruct(truth, truth, m, *bank), image), 1e-12) << m;
  EXPECT_EQ(phase_loss(truth, truth, {0, 1, 2}), 0.0);
}

TEST(EvaluateBatch, RejectsBadArguments) {
  const TrainConfig c = tiny_config();
  TrainState s = TrainState::fresh(c);
  const FilterBank bank(c.pyramid, {16, 16});
  EXPECT_THROW(evaluate_batch(s.network, {}, 1, c.loss, bank, nullptr), std::invalid_argument);
  const auto batch = prepare_batch({sample_patch(tiny_data(), 0, {16, false, false}, s.rng)}, bank);
  EXPECT_THROW(evaluate_batch(s.network, batch, 0, c.loss, bank, nullptr), std::invalid_argument);
  EXPECT_THROW(evaluate_batch(s.network, batch, 5, c.loss, bank, nullptr), std::invalid_argument);
  const BatchLoss l = evaluate_batch(s.network, batch, 1, c.loss, bank, nullptr);
  EXPECT_EQ(l.phase_term, 0.0);  // block 0 has no phase
  EXPECT_EQ(l.total, l.image_term);
}

TEST(Adam, ScalarUpdatesMatchHandComputation) {
  AdamConfig c;
  c.learning_rate = 0.1;
  double p = 1.0, m = 0.0, v = 0.0;
  adam_update(p, 0.5, m, v, 1, c);
  EXPECT_DOUBLE_EQ(m, 0.05);
  EXPECT_DOUBLE_EQ(v, 0.00025);
  EXPECT_NEAR(p, 0.9 + 2e-9, 1e-15);  // bias-corrected step 0.1·0.5/(0.5 + 1e-8)
  adam_update(p, -0.5, m, v, 2, c);
  EXPECT_NEAR(m, -0.005, 1e-17);
  EXPECT_NEAR(v, 0.00049975, 1e-17);
  // m̂ = -0.005 / 0.19, v̂ = 0.25
  EXPECT_NEAR(p, 0.9 + 2e-9 + 0.1 * (0.005 / 0.19) / (0.5 + 1e-8), 1e-15);
}

TEST(Adam, RejectsBadConfig) {
  AdamConfig c;
  c.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = AdamConfig{};
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = AdamConfig{};
  c.epsilon = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(TrainStage, ZeroLearningRateKeepsWeights) {
  TrainConfig c = tiny_config();
  c.adam.learning_rate = 0.0;
  TrainState s = TrainState::fresh(c);
  const Network before = s.network;
  const FilterBank bank(c.pyramid, {16, 16});
  const auto stages = plan_stages(s.network);
  train_stage(s, stages[1], tiny_data(), bank);
  for (int g = 0; g < s.network.groups(); ++g)
    for (int i = 0; i < BlockParams::kTrainable; ++i)
      EXPECT_EQ(*s.network.group(g).trainable()[i], *before.group(g).trainable()[i]);
  EXPECT_EQ(s.optimizer.slots()[1][0].step, 2);  // 6 triplets, batch 3
  EXPECT_EQ(s.optimizer.slots()[2][0].step, 0);
  EXPECT_NE(s.network.group(1).norm1_mean, before.group(1).norm1_mean);
}

TEST(TrainStage, OnlyStageGroupsChange) {
  TrainConfig c = tiny_config();
  TrainState s = TrainState::fresh(c);
  const Network before = s.network;
  const FilterBank bank(c.pyramid, {16, 16});
  train_stage(s, plan_stages(s.network)[0], tiny_data(), bank);
  EXPECT_NE(s.network.group(0), before.group(0));
  for (int g = 1; g < s.network.groups(); ++g) EXPECT_EQ(s.network.group(g), before.group(g)) << g;

  TrainConfig f = c;
  f.freeze_trained = true;
  TrainState frozen = TrainState::fresh(f);
  const Network start = frozen.network;
  train_stage(frozen, plan_stages(frozen.network)[2], tiny_data(), bank);
  EXPECT_EQ(frozen.network.group(0), start.group(0));
  EXPECT_EQ(frozen.network.group(1), start.group(1));
  EXPECT_NE(frozen.network.group(2), start.group(2));
}

TEST(TrainStage, RepeatedEpochsReduceLossOnAFixedSet) {
  TrainConfig c = tiny_config();
  c.epochs = {8};
  c.batch_sizes = {6};
  c.adam.learning_rate = 3e-3;
  c.flip_horizontal = c.flip_vertical = false;
  TrainState s = TrainState::fresh(c);
  const FilterBank bank(c.pyramid, {16, 16});
  const auto r = train_stage(s, plan_stages(s.network)[1], tiny_data(), bank);
  ASSERT_EQ(r.size(), 8u);
  EXPECT_LT(r.back().total, r.front().total);
  for (const auto& e : r) EXPECT_NEAR(e.total, e.image_term + 0.1 * e.phase_term, 1e-12);
}

TEST(TrainFull, SeededSingleThreadRunsAreBitwiseIdentical) {
  const SingleThread guard;
  testing::ScratchDir dir("determinism");
  const TripletDataset data = tiny_data();
  for (const char* run : {"a", "b"}) {
    TrainState s = TrainState::fresh(tiny_config());
    TrainOptions o;
    o.checkpoint_dir = dir / run;
    train_full(s, data, o);
  }
  EXPECT_EQ(read_file(dir / "a/latest.ckpt"), read_file(dir / "b/latest.ckpt"));
}

TEST(TrainFull, CheckpointsLogAndResumeMatchUninterruptedRun) {
  const SingleThread guard;
  testing::ScratchDir dir("resume");
  const TripletDataset data = tiny_data();

  TrainState full = TrainState::fresh(tiny_config());
  TrainOptions o;
  o.checkpoint_dir = dir / "full";
  o.log_path = dir / "full.jsonl";
  const auto records = train_full(full, data, o);
  EXPECT_EQ(full.stages_completed, 4);
  EXPECT_EQ(records.size(), 4u);
  for (int k = 0; k < 4; ++k) EXPECT_TRUE(std::filesystem::exists(dir / ("full/stage_" + std::to_string(k) + ".ckpt")));

  std::ifstream log(dir / "full.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("stage").get<int>(), lines);
    EXPECT_TRUE(j.contains("total") && j.contains("phase") && j.contains("image") && j.contains("seconds"));
    ++lines;
  }
  EXPECT_EQ(lines, 4);

  TrainState part = TrainState::fresh(tiny_config());
  TrainOptions p;
  p.checkpoint_dir = dir / "part";
  p.stop_after_stages = 2;
  train_full(part, data, p);
  EXPECT_EQ(part.stages_completed, 2);
  TrainState resumed = load_checkpoint(dir / "part/latest.ckpt");
  expect_same_state(resumed, part);
  train_full(resumed, data, p = TrainOptions{dir / "part", {}, -1, {}});
  EXPECT_EQ(read_file(dir / "part/latest.ckpt"), read_file(dir / "full/latest.ckpt"));
  expect_same_state(resumed, full);
}

TEST(Checkpoint, SaveLoadRoundTripsBitwise) {
  testing::ScratchDir dir("ckpt");
  TrainState s = TrainState::fresh(tiny_config());
  train_stage(s, plan_stages(s.network)[0], tiny_data(), FilterBank(s.config.pyramid, {16, 16}));
  s.stages_completed = 1;
  save_checkpoint(s, dir / "a.ckpt");
  const TrainState back = load_checkpoint(dir / "a.ckpt");
  expect_same_state(back, s);
  save_checkpoint(back, dir / "b.ckpt");
  EXPECT_EQ(read_file(dir / "a.ckpt"), read_file(dir / "b.ckpt"));
  EXPECT_EQ(load_network(dir / "a.ckpt"), s.network);

  // Extended networks store their base layout.
  Container c;
  put_network(c, s.network);
  EXPECT_EQ(get_network(c), s.network);
}

TEST(Checkpoint, RejectsDamagedFiles) {
  testing::ScratchDir dir("damaged");
  const TrainState s = TrainState::fresh(tiny_config());
  save_checkpoint(s, dir / "ok.ckpt");
  std::vector<std::uint8_t> bytes = read_file(dir / "ok.ckpt");

  auto write = [&](const std::string& name, const std::vector<std::uint8_t>& b) {
    write_file_atomic(dir / name, b);
    return dir / name;
  };
  EXPECT_THROW(load_checkpoint(write("short.ckpt", {bytes.begin(), bytes.begin() + bytes.size() / 2})),
               std::runtime_error);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(load_checkpoint(write("flip.ckpt", flipped)), std::runtime_error);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(load_checkpoint(write("magic.ckpt", magic)), std::runtime_error);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), std::runtime_error);

  Container c = checkpoint_container(s);
  std::vector<std::uint8_t> v2 = c.serialize();
  v2[4] = 2;  // version field, little-endian
  EXPECT_THROW(Container::deserialize(v2), std::runtime_error);
}

TEST(Checkpoint, DecompositionRoundTrip) {
  PyramidConfig cfg;
  cfg.levels = 3;
  const FilterBank bank(cfg, {16, 20});
  const Decomposition d = decompose(testing::random_grid(16, 20, 4), bank);
  const Decomposition back = get_decomposition(Container::deserialize(decomposition_container(d).serialize()));
  EXPECT_EQ(back.config, d.config);
  EXPECT_EQ(back.low_pass, d.low_pass);
  EXPECT_EQ(back.high_pass, d.high_pass);
  ASSERT_EQ(back.levels(), 3);
  for (int j = 0; j < 3; ++j)
    for (int o = 0; o < 4; ++o) {
      EXPECT_EQ(back.bands[j][o].values, d.bands[j][o].values);
      EXPECT_EQ(back.bands[j][o].level, j);
      EXPECT_EQ(back.bands[j][o].orientation, o);
    }
}

}  // namespace
}  // namespace phasenet

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "phasenet/adam.hpp"
#include "phasenet/dataset.hpp"
#include "phasenet/losses.hpp"
#include "phasenet/network.hpp"
#include "phasenet/pyramid.hpp"

namespace phasenet {

struct TrainConfig {
  PyramidConfig pyramid;
  int features = 64;
  AdamConfig adam;
  /// Per-stage batch sizes and epoch counts. Empty: 32 / 12 epochs, with the
  /// two finest stages at 16 and 12 / 6 epochs. A single entry applies to
  /// every stage.
  std::vector<int> batch_sizes;
  std::vector<int> epochs;
  int patch = 256;
  bool flip_horizontal = true;
  bool flip_vertical = true;
  bool freeze_trained = false;  ///< train only the stage's own groups
  LossConfig loss;
  std::uint64_t seed = 1;

  void validate() const;
  int batch_size(int stage, int stages) const;
  int epoch_count(int stage, int stages) const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Reduced profile for desktop runs: 64×64 patches, 6 levels, 5 stages.
TrainConfig desk_profile();

/// One curriculum stage: blocks [0, trained_blocks) run and are scored; the
/// stage introduces `new_groups`.
struct Stage {
  int index = 0;
  int trained_blocks = 0;
  std::vector<int> new_groups;
};

/// One stage per distinct parameter group, coarsest first.
std::vector<Stage> plan_stages(const Network& net);

/// One single-channel training sample with its decompositions.
struct PreparedSample {
  Decomposition first;
  Decomposition second;
  Decomposition target;
  RealGrid target_image;
  NetworkInput input;
};

PreparedSample prepare_sample(const RealGrid& first, const RealGrid& middle, const RealGrid& last,
                              const FilterBank& bank);

/// Splits every channel of every triplet into its own sample.
std::vector<PreparedSample> prepare_batch(const std::vector<Triplet>& triplets, const FilterBank& bank);

/// Ground truth with blocks [0, trained_blocks) replaced by prediction. The
/// high-pass comes from ground truth unless every block is predicted, in
/// which case it is zero.
Decomposition splice(const Decomposition& predicted, const Decomposition& ground_truth, int trained_blocks);

RealGrid hybrid_reconstruct(const Decomposition& predicted, const Decomposition& ground_truth, int trained_blocks,
                            const FilterBank& bank);

struct BatchLoss {
  double total = 0.0;
  double image_term = 0.0;
  double phase_term = 0.0;
};

/// Mean loss over the batch for a stage with `trained_blocks` predicted
/// blocks; train-mode forward. Adds exact parameter gradients into `grads`
/// when non-null. `update_stats` is forwarded to Network::forward.
BatchLoss evaluate_batch(Network& net, const std::vector<PreparedSample>& batch, int trained_blocks,
                         const LossConfig& loss, const FilterBank& bank, NetworkGradients* grads,
                         const std::vector<bool>& update_stats = {});

struct EpochRecord {
  int stage = 0;
  int trained_blocks = 0;
  int epoch = 0;
  double image_term = 0.0;
  double phase_term = 0.0;
  double total = 0.0;
  double seconds = 0.0;
};

/// Mutable training state: everything a checkpoint captures.
struct TrainState {
  TrainConfig config;
  Network network;
  Adam optimizer;
  int stages_completed = 0;
  std::mt19937_64 rng;

  static TrainState fresh(const TrainConfig& config);
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Runs one stage over `data`: each epoch draws ⌈|D|/batch⌉ batches from a
/// shuffled order. Returns per-epoch mean losses.
std::vector<EpochRecord> train_stage(TrainState& state, const Stage& stage, const TripletDataset& data,
                                     const FilterBank& bank, const EpochCallback& on_epoch = {});

struct TrainOptions {
  std::filesystem::path checkpoint_dir;  ///< empty: no checkpoints
  std::filesystem::path log_path;        ///< empty: no log; JSON lines otherwise
  int stop_after_stages = -1;            ///< stop early (for interruption tests)
  EpochCallback on_epoch;
};

/// Runs the remaining stages of `state`, checkpointing after each stage as
/// stage_<k>.ckpt and latest.ckpt.
std::vector<EpochRecord> train_full(TrainState& state, const TripletDataset& data, const TrainOptions& options);

}  // namespace phasenet

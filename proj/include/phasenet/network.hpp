#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "phasenet/tensor.hpp"

namespace phasenet {

/// Shape of the decoder. Block 0 handles the low-pass residual; block i ≥ 1
/// handles oriented level i - 1 (coarsest first).
struct NetworkConfig {
  int levels = 10;        ///< oriented pyramid levels n; the base model has n + 1 blocks
  int orientations = 4;   ///< b
  int features = 64;      ///< feature width of every block
  double leak = 0.2;      ///< leaky rectification slope
  double norm_momentum = 0.9;
  double norm_epsilon = 1e-5;

  void validate() const;
  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;

  int base_blocks() const { return levels + 1; }
  /// Pyramid channels fed to a block: 2 residuals, or phase+amplitude of b
  /// orientations for both frames.
  int pyramid_channels(int block) const { return block == 0 ? 2 : 4 * orientations; }
  int prediction_channels(int block) const { return block == 0 ? 1 : 2 * orientations; }
  int input_channels(int block) const;
  /// 1×1 for the three coarsest blocks, 3×3 above.
  int kernel_size(int block) const { return block < 3 ? 1 : 3; }
  /// First block of the weight-sharing group (the top three base blocks, never
  /// below block 3). Equals base_blocks() when nothing is shared.
  int shared_from() const;
};

/// Parameters of one block (or of the shared group).
struct BlockParams {
  static constexpr int kTrainable = 10;
  static constexpr int kBuffers = 4;
  static const std::array<const char*, kTrainable> trainable_names;
  static const std::array<const char*, kBuffers> buffer_names;

  int in_channels = 0;
  int features = 0;
  int out_channels = 0;
  int kernel = 1;

  std::vector<double> conv1_weight, conv1_bias, norm1_scale, norm1_offset;
  std::vector<double> conv2_weight, conv2_bias, norm2_scale, norm2_offset;
  std::vector<double> head_weight, head_bias;
  std::vector<double> norm1_mean, norm1_variance, norm2_mean, norm2_variance;

  BlockParams() = default;
  BlockParams(int in_channels, int features, int out_channels, int kernel);

  std::array<std::vector<double>*, kTrainable> trainable();
  std::array<const std::vector<double>*, kTrainable> trainable() const;
  std::array<std::vector<double>*, kBuffers> buffers();
  std::array<const std::vector<double>*, kBuffers> buffers() const;
  std::size_t parameter_count() const;

  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

/// Per-group gradients laid out like BlockParams::trainable().
struct GroupGradients {
  std::array<std::vector<double>, BlockParams::kTrainable> values;
};

struct NetworkGradients {
  std::vector<GroupGradients> groups;
  void zero();
};

/// Normalized pyramid inputs for one single-channel sample, one tensor per block.
struct NetworkInput {
  std::vector<Tensor> levels;
};

/// tanh outputs per block: 1 channel at block 0, 2b channels above with
/// channel 2θ the phase and 2θ+1 the amplitude mix of orientation θ.
struct RawPrediction {
  std::vector<Tensor> levels;
};

/// Activations recorded by a training-mode forward pass.
struct TrainTape {
  struct Block {
    std::vector<Tensor> input;      // concatenated block input, per sample
    std::vector<Tensor> norm1;      // x̂ after conv1
    std::vector<Tensor> act1;
    std::vector<Tensor> norm2;
    std::vector<Tensor> act2;       // block features
    std::vector<double> variance1;  // batch variance used by normalization
    std::vector<double> variance2;
  };
  std::vector<Block> blocks;
  std::vector<RawPrediction> outputs;
};

enum class Mode { train, eval };

/// Decoder weights Λ plus the block → parameter-group map. Groups below
/// shared_from() belong to one block each; the last group is shared by the
/// top base blocks and by every block added with extended().
class Network {
 public:
  Network() = default;
  /// Random initialization: kernels ~ N(0, 2 / (fan_in·(1 + leak²))), zero
  /// biases, unit scale, zero offset, running mean 0 and variance 1.
  Network(const NetworkConfig& config, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  int blocks() const { return static_cast<int>(block_group_.size()); }
  int group_of(int block) const { return block_group_.at(block); }
  int groups() const { return static_cast<int>(groups_.size()); }
  BlockParams& group(int g) { return groups_.at(g); }
  const BlockParams& group(int g) const { return groups_.at(g); }
  const BlockParams& block(int b) const { return groups_.at(block_group_.at(b)); }
  bool shared(int block) const;

  /// Trainable parameters across distinct groups (aliases counted once).
  std::size_t parameter_count() const;

  /// Copy with alias blocks appended so the network accepts `levels`
  /// oriented levels. No parameters are copied or changed.
  Network extended(int levels) const;

  NetworkGradients zero_gradients() const;

  /// Runs blocks 0..input.levels.size()-1 in eval mode with stored statistics.
  RawPrediction predict(const NetworkInput& input) const;

  /// Runs the first `blocks` blocks on a batch. Train mode normalizes with
  /// batch statistics and, for groups whose `update_stats` entry is true (all
  /// groups if empty), updates running statistics. Eval mode ignores the tape.
  std::vector<RawPrediction> forward(const std::vector<NetworkInput>& batch, Mode mode, int blocks,
                                     TrainTape* tape = nullptr, const std::vector<bool>& update_stats = {});

  /// Reverse pass of a train-mode forward. `grad_outputs` holds dL/d(raw) per
  /// sample for every block that ran. Adds parameter gradients into `grads`;
  /// fills `grad_inputs` when non-null.
  void backward(const TrainTape& tape, const std::vector<RawPrediction>& grad_outputs, NetworkGradients& grads,
                std::vector<NetworkInput>* grad_inputs = nullptr) const;

  friend bool operator==(const Network&, const Network&) = default;

  /// Used by checkpoint loading: rebuilds from a config and group parameters.
  static Network from_parts(const NetworkConfig& config, std::vector<BlockParams> groups, int blocks);

 private:
  void check_input(const NetworkInput& input, int blocks) const;

  NetworkConfig config_;
  std::vector<BlockParams> groups_;
  std::vector<int> block_group_;
};

}  // namespace phasenet

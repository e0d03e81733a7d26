#pragma once

#include <cstdint>
#include <vector>

#include "phasenet/network.hpp"

namespace phasenet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

/// Moments and step count of one parameter tensor.
struct AdamSlot {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  friend bool operator==(const AdamSlot&, const AdamSlot&) = default;
};

/// Adaptive-moment optimizer with bias-corrected moments. Step counts are
/// kept per tensor so groups that join training late start their own count.
class Adam {
 public:
  Adam() = default;
  Adam(const AdamConfig& config, const Network& net);

  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

  /// Updates every tensor of the groups flagged in `trainable`.
  void step(Network& net, const NetworkGradients& grads, const std::vector<bool>& trainable);

  /// slots()[group][tensor], tensors in BlockParams::trainable() order.
  std::vector<std::vector<AdamSlot>>& slots() { return slots_; }
  const std::vector<std::vector<AdamSlot>>& slots() const { return slots_; }

  friend bool operator==(const Adam&, const Adam&) = default;

 private:
  AdamConfig config_;
  std::vector<std::vector<AdamSlot>> slots_;
};

/// One scalar update, exposed for checking against hand-computed values.
void adam_update(double& param, double grad, double& m, double& v, std::int64_t step, const AdamConfig& config);

}  // namespace phasenet

#pragma once

#include <vector>

#include "phasenet/image.hpp"
#include "phasenet/pyramid.hpp"

namespace phasenet {

struct LossConfig {
  double phase_weight = 0.1;  ///< ν

  void validate() const;
  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

struct LossValue {
  double total = 0.0;
  double image_term = 0.0;
  double phase_term = 0.0;  ///< before weighting by ν
};

/// Mean absolute difference over all pixels and channels.
double image_l1(const Image& predicted, const Image& target);
double image_l1(const RealGrid& predicted, const RealGrid& target);

/// Adds weight · d(mean |p - t|)/dp into `grad`. The subgradient at 0 is 0.
void add_image_l1_gradient(const RealGrid& predicted, const RealGrid& target, double weight, RealGrid& grad);

/// atan2(sin(a - b), cos(a - b)), in (-π, π].
double phase_diff(double phi, double phi_hat);
RealGrid phase_diff(const RealGrid& phi, const RealGrid& phi_hat);

/// Mean over pixels of |phase_diff(φ, φ̂)| for one subband.
double mean_abs_phase_diff(const RealGrid& phi, const RealGrid& phi_hat);

/// Adds weight · d(mean |phase_diff(φ, φ̂)|)/dφ̂ into `grad`.
void add_phase_gradient(const RealGrid& phi, const RealGrid& phi_hat, double weight, RealGrid& grad);

/// Σ over `levels` and all orientations of the per-subband mean absolute
/// wrapped phase difference between target and prediction.
double phase_loss(const Decomposition& predicted, const Decomposition& target, const std::vector<int>& levels);

LossValue total_loss(const Image& predicted_image, const Image& target_image, const Decomposition& predicted,
                     const Decomposition& target, const std::vector<int>& levels, const LossConfig& config);

}  // namespace phasenet

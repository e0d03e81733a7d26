#include "phasenet/losses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace phasenet {
namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

void LossConfig::validate() const {
  if (!(phase_weight >= 0.0) || !std::isfinite(phase_weight))
    throw std::invalid_argument("LossConfig: phase weight must be finite and >= 0");
}

double image_l1(const RealGrid& predicted, const RealGrid& target) {
  require_same_extent(predicted.extent(), target.extent(), "image_l1");
  if (predicted.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) s += std::abs(predicted[i] - target[i]);
  return s / static_cast<double>(predicted.size());
}

double image_l1(const Image& predicted, const Image& target) {
  require_same_shape(predicted, target, "image_l1");
  if (predicted.channels() == 0) return 0.0;
  double s = 0.0;
  for (int c = 0; c < predicted.channels(); ++c) s += image_l1(predicted.channel(c), target.channel(c));
  return s / predicted.channels();
}

void add_image_l1_gradient(const RealGrid& predicted, const RealGrid& target, double weight, RealGrid& grad) {
  require_same_extent(predicted.extent(), target.extent(), "image_l1 gradient");
  require_same_extent(predicted.extent(), grad.extent(), "image_l1 gradient");
  const double scale = weight / static_cast<double>(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) grad[i] += scale * sign(predicted[i] - target[i]);
}

double phase_diff(double phi, double phi_hat) {
  const double d = phi - phi_hat;
  const double wrapped = std::atan2(std::sin(d), std::cos(d));
  return wrapped <= -std::numbers::pi ? std::numbers::pi : wrapped;
}

RealGrid phase_diff(const RealGrid& phi, const RealGrid& phi_hat) {
  require_same_extent(phi.extent(), phi_hat.extent(), "phase_diff");
  RealGrid out(phi.extent());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = phase_diff(phi[i], phi_hat[i]);
  return out;
}

double mean_abs_phase_diff(const RealGrid& phi, const RealGrid& phi_hat) {
  require_same_extent(phi.extent(), phi_hat.extent(), "phase loss");
  if (phi.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) s += std::abs(phase_diff(phi[i], phi_hat[i]));
  return s / static_cast<double>(phi.size());
}

void add_phase_gradient(const RealGrid& phi, const RealGrid& phi_hat, double weight, RealGrid& grad) {
  require_same_extent(phi.extent(), phi_hat.extent(), "phase loss gradient");
  require_same_extent(phi.extent(), grad.extent(), "phase loss gradient");
  // d|wrap(φ - φ̂)|/dφ̂ = -sign(wrap(φ - φ̂)) away from the wrap point.
  const double scale = weight / static_cast<double>(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) grad[i] -= scale * sign(phase_diff(phi[i], phi_hat[i]));
}

double phase_loss(const Decomposition& predicted, const Decomposition& target, const std::vector<int>& levels) {
  if (levels.empty()) throw std::invalid_argument("phase_loss: empty level subset");
  double total = 0.0;
  for (int j : levels) {
    if (j < 0 || j >= predicted.levels() || j >= target.levels())
      throw std::invalid_argument("phase_loss: level " + std::to_string(j) + " out of range");
    if (predicted.bands[j].size() != target.bands[j].size())
      throw std::invalid_argument("phase_loss: orientation count mismatch");
    for (std::size_t o = 0; o < target.bands[j].size(); ++o)
      total += mean_abs_phase_diff(phase(target.bands[j][o]), phase(predicted.bands[j][o]));
  }
  return total;
}

LossValue total_loss(const Image& predicted_image, const Image& target_image, const Decomposition& predicted,
                     const Decomposition& target, const std::vector<int>& levels, const LossConfig& config) {
  config.validate();
  LossValue v;
  v.image_term = image_l1(predicted_image, target_image);
  v.phase_term = phase_loss(predicted, target, levels);
  v.total = v.image_term + config.phase_weight * v.phase_term;
  return v;
}

}  // namespace phasenet

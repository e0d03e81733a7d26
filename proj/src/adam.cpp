#include "phasenet/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace phasenet {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("Adam: learning rate must be finite and >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("Adam: moment decays must be in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("Adam: epsilon must be > 0");
}

void adam_update(double& param, double grad, double& m, double& v, std::int64_t step, const AdamConfig& c) {
  m = c.beta1 * m + (1.0 - c.beta1) * grad;
  v = c.beta2 * v + (1.0 - c.beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(c.beta1, static_cast<double>(step)));
  const double v_hat = v / (1.0 - std::pow(c.beta2, static_cast<double>(step)));
  param -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
}

Adam::Adam(const AdamConfig& config, const Network& net) : config_(config) {
  config_.validate();
  slots_.resize(net.groups());
  for (int g = 0; g < net.groups(); ++g) {
    for (const auto* t : net.group(g).trainable()) {
      AdamSlot s;
      s.m.assign(t->size(), 0.0);
      s.v.assign(t->size(), 0.0);
      slots_[g].push_back(std::move(s));
    }
  }
}

void Adam::step(Network& net, const NetworkGradients& grads, const std::vector<bool>& trainable) {
  if (static_cast<int>(slots_.size()) != net.groups() || grads.groups.size() != slots_.size() ||
      trainable.size() != slots_.size())
    throw std::invalid_argument("Adam::step: group count mismatch");
  for (std::size_t g = 0; g < slots_.size(); ++g) {
    if (!trainable[g]) continue;
    auto params = net.group(static_cast<int>(g)).trainable();
    for (int i = 0; i < BlockParams::kTrainable; ++i) {
      AdamSlot& s = slots_[g][i];
      std::vector<double>& p = *params[i];
      const std::vector<double>& gr = grads.groups[g].values[i];
      if (gr.size() != p.size()) throw std::invalid_argument("Adam::step: gradient size mismatch");
      ++s.step;
      for (std::size_t k = 0; k < p.size(); ++k) adam_update(p[k], gr[k], s.m[k], s.v[k], s.step, config_);
    }
  }
}

}  // namespace phasenet

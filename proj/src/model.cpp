#include "phasenet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace phasenet {
namespace {

void require_pair(const Decomposition& a, const Decomposition& b) {
  if (a.levels() != b.levels() || a.orientations() != b.orientations())
    throw std::invalid_argument("decomposition pair: level/orientation mismatch");
  require_same_extent(a.low_pass.extent(), b.low_pass.extent(), "decomposition pair low-pass");
  for (int j = 0; j < a.levels(); ++j)
    for (int o = 0; o < a.orientations(); ++o)
      require_same_extent(a.bands[j][o].values.extent(), b.bands[j][o].values.extent(), "decomposition pair band");
}

void require_raw(const Tensor& raw, int block, const Decomposition& d) {
  const Extent e = block == 0 ? d.low_pass.extent() : d.bands.at(block - 1).at(0).values.extent();
  const int channels = block == 0 ? 1 : 2 * d.orientations();
  if (raw.channels != channels || raw.height != e.height || raw.width != e.width)
    throw std::invalid_argument("remap: raw prediction " + raw.shape_string() + " does not fit block " +
                                std::to_string(block));
}

}  // namespace

NetworkConfig network_config_for(const PyramidConfig& pyramid, int features) {
  NetworkConfig c;
  c.levels = pyramid.levels;
  c.orientations = pyramid.orientations;
  c.features = features;
  return c;
}

NetworkInput normalize_inputs(const Decomposition& first, const Decomposition& second) {
  require_pair(first, second);
  const int b = first.orientations();
  NetworkInput in;
  in.levels.reserve(first.levels() + 1);

  {
    const Extent e = first.low_pass.extent();
    double peak = 0.0;
    for (std::size_t i = 0; i < first.low_pass.size(); ++i)
      peak = std::max({peak, std::abs(first.low_pass[i]), std::abs(second.low_pass[i])});
    const double inv = 1.0 / std::max(peak, kNormalizationFloor);
    Tensor t(2, e.height, e.width);
    for (std::size_t i = 0; i < e.area(); ++i) {
      t.data[i] = first.low_pass[i] * inv;
      t.data[e.area() + i] = second.low_pass[i] * inv;
    }
    in.levels.push_back(std::move(t));
  }

  for (int j = 0; j < first.levels(); ++j) {
    const Extent e = first.bands[j][0].values.extent();
    const std::size_t hw = e.area();
    double peak = 0.0;
    for (int o = 0; o < b; ++o)
      for (std::size_t i = 0; i < hw; ++i)
        peak = std::max({peak, std::abs(first.bands[j][o].values[i]), std::abs(second.bands[j][o].values[i])});
    const double inv = 1.0 / std::max(peak, kNormalizationFloor);
    Tensor t(4 * b, e.height, e.width);
    for (int o = 0; o < b; ++o) {
      const auto& z1 = first.bands[j][o].values;
      const auto& z2 = second.bands[j][o].values;
      for (std::size_t i = 0; i < hw; ++i) {
        t.channel(o)[i] = phase_of(z1[i]) / std::numbers::pi;
        t.channel(b + o)[i] = std::abs(z1[i]) * inv;
        t.channel(2 * b + o)[i] = phase_of(z2[i]) / std::numbers::pi;
        t.channel(3 * b + o)[i] = std::abs(z2[i]) * inv;
      }
    }
    in.levels.push_back(std::move(t));
  }
  return in;
}

RealGrid predicted_phase(const Tensor& raw, int orientation) {
  RealGrid out(raw.height, raw.width);
  const double* p = raw.channel(2 * orientation);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::numbers::pi * p[i];
  return out;
}

void remap_block(const Tensor& raw, int block, const Decomposition& first, const Decomposition& second,
                 Decomposition& out) {
  require_raw(raw, block, first);
  if (block == 0) {
    for (std::size_t i = 0; i < out.low_pass.size(); ++i) {
      const double alpha = 0.5 * (raw.data[i] + 1.0);
      out.low_pass[i] = alpha * first.low_pass[i] + (1.0 - alpha) * second.low_pass[i];
    }
    return;
  }
  const int j = block - 1;
  for (int o = 0; o < first.orientations(); ++o) {
    const double* ph = raw.channel(2 * o);
    const double* mix = raw.channel(2 * o + 1);
    const auto& z1 = first.bands[j][o].values;
    const auto& z2 = second.bands[j][o].values;
    auto& z = out.bands[j][o].values;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double beta = 0.5 * (mix[i] + 1.0);
      const double amp = beta * std::abs(z1[i]) + (1.0 - beta) * std::abs(z2[i]);
      z[i] = std::polar(amp, std::numbers::pi * ph[i]);
    }
  }
}

Decomposition remap(const RawPrediction& raw, const Decomposition& first, const Decomposition& second) {
  require_pair(first, second);
  if (static_cast<int>(raw.levels.size()) != first.levels() + 1)
    throw std::invalid_argument("remap: raw prediction has " + std::to_string(raw.levels.size()) +
                                " blocks, decomposition needs " + std::to_string(first.levels() + 1));
  Decomposition out = first;
  std::fill(out.high_pass.begin(), out.high_pass.end(), 0.0);
  for (int b = 0; b <= first.levels(); ++b) remap_block(raw.levels[b], b, first, second, out);
  return out;
}

Tensor remap_block_backward(const Tensor& raw, int block, const Decomposition& first, const Decomposition& second,
                            const Decomposition& grad) {
  require_raw(raw, block, first);
  Tensor d(raw.channels, raw.height, raw.width);
  if (block == 0) {
    for (std::size_t i = 0; i < d.size(); ++i) d.data[i] = 0.5 * grad.low_pass[i] * (first.low_pass[i] - second.low_pass[i]);
    return d;
  }
  const int j = block - 1;
  for (int o = 0; o < first.orientations(); ++o) {
    const double* ph = raw.channel(2 * o);
    const double* mix = raw.channel(2 * o + 1);
    double* d_ph = d.channel(2 * o);
    double* d_mix = d.channel(2 * o + 1);
    const auto& z1 = first.bands[j][o].values;
    const auto& z2 = second.bands[j][o].values;
    const auto& g = grad.bands[j][o].values;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a1 = std::abs(z1[i]);
      const double a2 = std::abs(z2[i]);
      const double beta = 0.5 * (mix[i] + 1.0);
      const double amp = beta * a1 + (1.0 - beta) * a2;
      const double phi = std::numbers::pi * ph[i];
      const double c = std::cos(phi);
      const double s = std::sin(phi);
      const double d_amp = g[i].real() * c + g[i].imag() * s;
      const double d_phi = amp * (-g[i].real() * s + g[i].imag() * c);
      d_ph[i] = std::numbers::pi * d_phi;
      d_mix[i] = 0.5 * d_amp * (a1 - a2);
    }
  }
  return d;
}

RealGrid interpolate_channel(const RealGrid& first, const RealGrid& second, const Network& net,
                             const FilterBank& bank) {
  require_same_extent(first.extent(), second.extent(), "interpolate");
  require_same_extent(first.extent(), bank.finest(), "interpolate");
  const Decomposition r1 = decompose(first, bank);
  const Decomposition r2 = decompose(second, bank);
  const RawPrediction raw = net.predict(normalize_inputs(r1, r2));
  return reconstruct(remap(raw, r1, r2), bank, false);
}

Image interpolate(const Image& first, const Image& second, const Network& net, const FilterBank& bank) {
  require_same_shape(first, second, "interpolate");
  std::vector<RealGrid> planes;
  for (int c = 0; c < first.channels(); ++c)
    planes.push_back(interpolate_channel(first.channel(c), second.channel(c), net, bank));
  return Image(std::move(planes)).clamped();
}

}  // namespace phasenet

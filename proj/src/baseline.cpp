#include "phasenet/baseline.hpp"

#include <cmath>
#include <stdexcept>

#include "phasenet/losses.hpp"

namespace phasenet {

double phase_midpoint(double phi1, double phi2) {
  // phase_diff maps onto (-π, π], so the tie at exactly π steps forward.
  return phase_diff(phi1 + 0.5 * phase_diff(phi2, phi1), 0.0);
}

Decomposition naive_phase_decomposition(const Decomposition& first, const Decomposition& second) {
  if (first.levels() != second.levels() || first.orientations() != second.orientations())
    throw std::invalid_argument("naive phase baseline: decomposition layouts differ");
  require_same_extent(first.low_pass.extent(), second.low_pass.extent(), "naive phase baseline");
  Decomposition out = first;
  for (int j = 0; j < first.levels(); ++j)
    for (int o = 0; o < first.orientations(); ++o) {
      const ComplexGrid& z1 = first.bands[j][o].values;
      const ComplexGrid& z2 = second.bands[j][o].values;
      require_same_extent(z1.extent(), z2.extent(), "naive phase baseline");
      ComplexGrid& z = out.bands[j][o].values;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double amp = 0.5 * (std::abs(z1[i]) + std::abs(z2[i]));
        z[i] = std::polar(amp, phase_midpoint(phase_of(z1[i]), phase_of(z2[i])));
      }
    }
  for (std::size_t i = 0; i < out.low_pass.size(); ++i)
    out.low_pass[i] = 0.5 * (first.low_pass[i] + second.low_pass[i]);
  std::fill(out.high_pass.begin(), out.high_pass.end(), 0.0);
  return out;
}

RealGrid naive_phase_interpolate(const Decomposition& first, const Decomposition& second, const FilterBank& bank) {
  return reconstruct(naive_phase_decomposition(first, second), bank, false);
}

Image naive_phase_interpolate(const Image& first, const Image& second, const FilterBank& bank) {
  require_same_shape(first, second, "naive phase baseline");
  std::vector<RealGrid> planes;
  for (int c = 0; c < first.channels(); ++c)
    planes.push_back(
        naive_phase_interpolate(decompose(first.channel(c), bank), decompose(second.channel(c), bank), bank));
  return Image(std::move(planes)).clamped();
}

Image average_interpolate(const Image& first, const Image& second) {
  require_same_shape(first, second, "average baseline");
  Image out = first;
  for (int c = 0; c < out.channels(); ++c) {
    RealGrid& p = out.channel(c);
    const RealGrid& q = second.channel(c);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.5 * (p[i] + q[i]);
  }
  return out;
}

}  // namespace phasenet

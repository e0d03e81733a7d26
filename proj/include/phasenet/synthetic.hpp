#pragma once

#include <cstdint>
#include <random>

#include "phasenet/dataset.hpp"

namespace phasenet {

/// Translating-texture triplets: a periodic random texture with a
/// 1/(f + f0)^p amplitude spectrum, shown at -d/2, 0 and +d/2 along a random
/// direction, where the total shift d is uniform in [min_shift, max_shift].
struct SyntheticConfig {
  int size = 64;
  int count = 500;
  double min_shift = 0.0;
  double max_shift = 8.0;
  double spectral_exponent = 1.5;
  double spectral_offset = 0.02;
  double contrast = 0.15;  ///< pixel = 0.5 + contrast·(unit-variance texture), clipped
  std::uint64_t seed = 1;

  void validate() const;
};

/// Zero-mean, unit-variance periodic texture.
RealGrid random_texture(int size, double exponent, double offset, std::mt19937_64& rng);

/// Translates a periodic image by (dy, dx) pixels via a Fourier phase ramp.
RealGrid fourier_shift(const RealGrid& image, double dy, double dx);

Triplet synthetic_triplet(const SyntheticConfig& config, double shift, std::mt19937_64& rng);

TripletDataset synthetic_dataset(const SyntheticConfig& config);

}  // namespace phasenet

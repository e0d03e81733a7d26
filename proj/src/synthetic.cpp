#include "phasenet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "phasenet/fft.hpp"

namespace phasenet {

void SyntheticConfig::validate() const {
  if (size < 4) throw std::invalid_argument("synthetic: size must be >= 4");
  if (count < 1) throw std::invalid_argument("synthetic: count must be >= 1");
  if (!(min_shift >= 0.0) || !(max_shift >= min_shift)) throw std::invalid_argument("synthetic: bad shift range");
  if (!(spectral_offset > 0.0)) throw std::invalid_argument("synthetic: spectral offset must be > 0");
}

RealGrid random_texture(int size, double exponent, double offset, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  ComplexGrid spec(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double fy = static_cast<double>(fft::signed_index(y, size)) / size;
      const double fx = static_cast<double>(fft::signed_index(x, size)) / size;
      const double f = std::hypot(fy, fx);
      const double amp = (y == 0 && x == 0) ? 0.0 : std::pow(f + offset, -exponent);
      spec(y, x) = std::polar(amp, angle(rng));
    }
  fft::transform(spec, fft::Direction::inverse);
  RealGrid t(size, size);
  double mean = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) mean += (t[i] = spec[i].real());
  mean /= static_cast<double>(t.size());
  double var = 0.0;
  for (double& v : t) {
    v -= mean;
    var += v * v;
  }
  const double inv = 1.0 / (std::sqrt(var / static_cast<double>(t.size())) + 1e-12);
  for (double& v : t) v *= inv;
  return t;
}

RealGrid fourier_shift(const RealGrid& image, double dy, double dx) {
  ComplexGrid spec = fft::forward(image);
  const int h = image.rows();
  const int w = image.cols();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double ky = static_cast<double>(fft::signed_index(y, h)) / h;
      const double kx = static_cast<double>(fft::signed_index(x, w)) / w;
      spec(y, x) *= std::polar(1.0, -2.0 * std::numbers::pi * (ky * dy + kx * dx));
    }
  fft::transform(spec, fft::Direction::inverse);
  RealGrid out(image.extent());
  const double inv = 1.0 / static_cast<double>(image.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spec[i].real() * inv;
  return out;
}

Triplet synthetic_triplet(const SyntheticConfig& config, double shift, std::mt19937_64& rng) {
  const RealGrid texture = random_texture(config.size, config.spectral_exponent, config.spectral_offset, rng);
  std::uniform_real_distribution<double> direction(0.0, 2.0 * std::numbers::pi);
  const double theta = direction(rng);
  const double dx = 0.5 * shift * std::cos(theta);
  const double dy = 0.5 * shift * std::sin(theta);
  auto frame = [&](double s) {
    RealGrid g = fourier_shift(texture, s * dy, s * dx);
    for (double& v : g) v = std::clamp(0.5 + config.contrast * v, 0.0, 1.0);
    return Image(std::move(g));
  };
  return {frame(-1.0), frame(0.0), frame(1.0)};
}

TripletDataset synthetic_dataset(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> shift(config.min_shift, config.max_shift);
  std::vector<Triplet> triplets;
  triplets.reserve(config.count);
  for (int i = 0; i < config.count; ++i) {
    const double d = shift(rng);
    triplets.push_back(synthetic_triplet(config, d, rng));
  }
  return TripletDataset::from_triplets(std::move(triplets));
}

}  // namespace phasenet

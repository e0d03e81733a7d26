#include "phasenet/pyramid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "phasenet/fft.hpp"

namespace phasenet {
namespace {

constexpr std::array<int, 11> kPublishedSchedule = {8, 12, 16, 22, 32, 46, 64, 90, 128, 182, 256};

// Side lengths from finest to coarsest.
std::vector<int> side_schedule(int side, double lambda, int levels) {
  const bool pinned = side == 256 && std::abs(lambda - std::numbers::sqrt2) < 1e-12;
  std::vector<int> sides{side};
  for (int k = 1; k <= levels; ++k) {
    int next = 0;
    if (pinned && k < static_cast<int>(kPublishedSchedule.size())) {
      next = kPublishedSchedule[kPublishedSchedule.size() - 1 - k];
    } else {
      next = static_cast<int>(std::ceil(sides.back() / lambda - 1e-9));
    }
    if (next < 2 || next >= sides.back()) {
      throw std::invalid_argument("resolution_schedule: side " + std::to_string(side) + " too small for " +
                                  std::to_string(levels) + " levels");
    }
    sides.push_back(next);
  }
  return sides;
}

std::vector<int> crop_map(int crop, int full) {
  std::vector<int> map(crop);
  for (int i = 0; i < crop; ++i) map[i] = fft::position(fft::signed_index(i, crop), full);
  return map;
}

double angular_normalization(int b) {
  // Makes Σ_k cos^(2(b-1))(θ - kπ/b) = 1 / α² over the full circle.
  const double log_alpha = (b - 1) * std::log(2.0) + std::lgamma(b) - 0.5 * (std::log(b) + std::lgamma(2.0 * b - 1.0));
  return std::exp(log_alpha);
}

}  // namespace

void PyramidConfig::validate() const {
  if (!(scale_factor > 1.0) || !std::isfinite(scale_factor))
    throw std::invalid_argument("PyramidConfig: scale factor must be > 1");
  if (orientations < 1) throw std::invalid_argument("PyramidConfig: orientations must be >= 1");
  if (levels < 1) throw std::invalid_argument("PyramidConfig: levels must be >= 1");
  if (!(transition_width > 0.0) || transition_width > 1.0)
    throw std::invalid_argument("PyramidConfig: transition width must be in (0, 1]");
}

std::vector<Extent> resolution_schedule(const PyramidConfig& config, Extent finest) {
  config.validate();
  auto rows = side_schedule(finest.height, config.scale_factor, config.levels);
  auto cols = side_schedule(finest.width, config.scale_factor, config.levels);
  std::vector<Extent> out;
  out.reserve(rows.size());
  for (std::size_t i = rows.size(); i-- > 0;) out.push_back({rows[i], cols[i]});
  return out;
}

double phase_of(std::complex<double> z) {
  if (z.real() == 0.0 && z.imag() == 0.0) return 0.0;
  double a = std::arg(z);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

RealGrid amplitude(const ComplexGrid& band) {
  RealGrid out(band.extent());
  for (std::size_t i = 0; i < band.size(); ++i) out[i] = std::abs(band[i]);
  return out;
}

RealGrid phase(const ComplexGrid& band) {
  RealGrid out(band.extent());
  for (std::size_t i = 0; i < band.size(); ++i) out[i] = phase_of(band[i]);
  return out;
}

// ---------------------------------------------------------------------------
// FilterBank

FilterBank::FilterBank(const PyramidConfig& config, Extent finest)
    : config_(config), schedule_(resolution_schedule(config, finest)) {
  const int n = config_.levels;
  const double lambda = config_.scale_factor;

  double fit = 1.0;
  for (int k = 0; k <= n; ++k) {
    const Extent r = schedule_[n - k];
    fit = std::min(fit, std::pow(lambda, k) * (r.height - 1) / finest.height);
    fit = std::min(fit, std::pow(lambda, k) * (r.width - 1) / finest.width);
  }
  radial_scale_ = fit * std::pow(lambda, -0.5 * config_.transition_width);
  angular_norm_ = angular_normalization(config_.orientations);

  for (const Extent& e : schedule_) {
    row_maps_.push_back(crop_map(e.height, finest.height));
    col_maps_.push_back(crop_map(e.width, finest.width));
  }

  auto fill = [&](RealGrid& mask, int schedule_index, auto&& response) {
    const Extent e = schedule_[schedule_index];
    mask = RealGrid(e);
    for (int py = 0; py < e.height; ++py) {
      const double u = 2.0 * fft::signed_index(py, e.height) / finest.height;
      for (int px = 0; px < e.width; ++px) {
        const double v = 2.0 * fft::signed_index(px, e.width) / finest.width;
        mask(py, px) = response(u, v);
      }
    }
  };

  band_masks_.resize(n);
  for (int j = 0; j < n; ++j) {
    band_masks_[j].resize(config_.orientations);
    for (int o = 0; o < config_.orientations; ++o)
      fill(band_masks_[j][o], j + 1, [&](double u, double v) { return band_response(j, o, u, v); });
  }
  fill(low_mask_, 0, [&](double u, double v) { return low_pass_response(u, v); });
  fill(high_mask_, n, [&](double u, double v) { return high_pass_response(u, v); });
}

double FilterBank::boundary(int j) const { return radial_scale_ * std::pow(config_.scale_factor, -j); }

namespace {

// Raised-cosine pair around a boundary: low → 1 below, high → 1 above, and
// low² + high² = 1 everywhere.
struct Window {
  double low;
  double high;
};

Window transition(double rho, double boundary, double lambda, double width) {
  if (rho <= 0.0) return {1.0, 0.0};
  const double t = std::log(rho / boundary) / std::log(lambda);
  if (t <= -0.5 * width) return {1.0, 0.0};
  if (t >= 0.5 * width) return {0.0, 1.0};
  const double arg = 0.5 * std::numbers::pi * (t / width + 0.5);
  return {std::cos(arg), std::sin(arg)};
}

}  // namespace

double FilterBank::radial_band(int filter_index, double rho) const {
  const double lambda = config_.scale_factor;
  const double w = config_.transition_width;
  return transition(rho, boundary(filter_index), lambda, w).low *
         transition(rho, boundary(filter_index + 1), lambda, w).high;
}

double FilterBank::angular_window(int orientation, double u, double v) const {
  const double rho = std::hypot(u, v);
  if (rho == 0.0) return 0.0;
  const double theta = orientation * std::numbers::pi / config_.orientations;
  const double along = (v * std::cos(theta) + u * std::sin(theta)) / rho;
  const double across = (-v * std::sin(theta) + u * std::cos(theta)) / rho;
  // Half-plane membership; the dividing line itself is split by the sign of
  // the perpendicular component so f and -f never both belong.
  const bool inside = along > 1e-12 || (std::abs(along) <= 1e-12 && across > 0.0);
  if (!inside) return 0.0;
  return angular_norm_ * std::pow(std::abs(along), config_.orientations - 1);
}

double FilterBank::band_response(int level, int orientation, double u, double v) const {
  const int filter_index = config_.levels - 1 - level;
  const double radial = radial_band(filter_index, std::hypot(u, v));
  if (radial == 0.0) return 0.0;
  return radial * angular_window(orientation, u, v);
}

double FilterBank::low_pass_response(double u, double v) const {
  return transition(std::hypot(u, v), boundary(config_.levels), config_.scale_factor, config_.transition_width).low;
}

double FilterBank::high_pass_response(double u, double v) const {
  return transition(std::hypot(u, v), boundary(0), config_.scale_factor, config_.transition_width).high;
}

double FilterBank::band_peak_frequency(int level) const {
  const int filter_index = config_.levels - 1 - level;
  return radial_scale_ * std::pow(config_.scale_factor, -filter_index - 0.5);
}

double FilterBank::tiling_error() const {
  const Extent full = finest();
  RealGrid sum(full);
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = high_mask_[i] * high_mask_[i];

  auto accumulate = [&](const RealGrid& mask, int schedule_index, bool analytic) {
    const auto& rows = row_maps_[schedule_index];
    const auto& cols = col_maps_[schedule_index];
    for (int py = 0; py < mask.rows(); ++py) {
      for (int px = 0; px < mask.cols(); ++px) {
        const double m2 = mask(py, px) * mask(py, px);
        const int fy = rows[py];
        const int fx = cols[px];
        sum(fy, fx) += m2;
        if (analytic) sum((full.height - fy) % full.height, (full.width - fx) % full.width) += m2;
      }
    }
  };
  for (int j = 0; j < levels(); ++j)
    for (int o = 0; o < orientations(); ++o) accumulate(band_masks_[j][o], j + 1, true);
  accumulate(low_mask_, 0, false);

  double worst = 0.0;
  for (double s : sum) worst = std::max(worst, std::abs(1.0 - s));
  return worst;
}

double FilterBank::support_leak() const {
  const Extent full = finest();
  auto outside = [&](int schedule_index, int fy, int fx) {
    const Extent e = schedule_[schedule_index];
    const int ky = fft::signed_index(fy, full.height);
    const int kx = fft::signed_index(fx, full.width);
    auto in_crop = [](int k, int n) { return k >= -(n / 2) && k <= (n - 1) / 2; };
    return !in_crop(ky, e.height) || !in_crop(kx, e.width);
  };
  double worst = 0.0;
  for (int fy = 0; fy < full.height; ++fy) {
    const double u = 2.0 * fft::signed_index(fy, full.height) / full.height;
    for (int fx = 0; fx < full.width; ++fx) {
      const double v = 2.0 * fft::signed_index(fx, full.width) / full.width;
      for (int j = 0; j < levels(); ++j) {
        if (!outside(j + 1, fy, fx)) continue;
        for (int o = 0; o < orientations(); ++o) worst = std::max(worst, std::abs(band_response(j, o, u, v)));
      }
      if (outside(0, fy, fx)) worst = std::max(worst, std::abs(low_pass_response(u, v)));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------

Decomposition Decomposition::zeros(const FilterBank& bank) {
  Decomposition d;
  d.config = bank.config();
  d.bands.resize(bank.levels());
  for (int j = 0; j < bank.levels(); ++j) {
    for (int o = 0; o < bank.orientations(); ++o)
      d.bands[j].push_back(Subband{ComplexGrid(bank.band_extent(j)), j, o});
  }
  d.low_pass = RealGrid(bank.low_pass_extent());
  d.high_pass = RealGrid(bank.finest());
  return d;
}

void require_compatible(const Decomposition& dec, const FilterBank& bank) {
  if (dec.levels() != bank.levels() || dec.orientations() != bank.orientations())
    throw std::invalid_argument("decomposition does not match filter bank level/orientation count");
  for (int j = 0; j < bank.levels(); ++j) {
    if (static_cast<int>(dec.bands[j].size()) != bank.orientations())
      throw std::invalid_argument("decomposition: ragged orientation list");
    for (const auto& s : dec.bands[j]) require_same_extent(s.values.extent(), bank.band_extent(j), "decomposition band");
  }
  require_same_extent(dec.low_pass.extent(), bank.low_pass_extent(), "decomposition low-pass");
  require_same_extent(dec.high_pass.extent(), bank.finest(), "decomposition high-pass");
}

namespace {

// Shared by decompose and the reconstruction adjoint: filters a full-grid
// spectrum with every mask, crops to the level grid and inverts. The two
// callers differ only in the scalar applied per output grid.
template <typename Scale>
Decomposition analyze(const ComplexGrid& spectrum, const FilterBank& bank, Scale&& scale) {
  Decomposition dec = Decomposition::zeros(bank);
  const int n = bank.levels();
  const int b = bank.orientations();

  auto crop_filter = [&](ComplexGrid& out, const RealGrid& mask, int schedule_index, double s) {
    const auto& rows = bank.row_map(schedule_index);
    const auto& cols = bank.col_map(schedule_index);
    for (int py = 0; py < mask.rows(); ++py)
      for (int px = 0; px < mask.cols(); ++px) out(py, px) = spectrum(rows[py], cols[px]) * (mask(py, px) * s);
    fft::transform(out, fft::Direction::inverse);
  };

#pragma omp parallel for schedule(dynamic)
  for (int task = 0; task < n * b + 2; ++task) {
    if (task < n * b) {
      const int j = task / b;
      const int o = task % b;
      crop_filter(dec.bands[j][o].values, bank.band_mask(j, o), j + 1, scale(bank.band_extent(j), true));
    } else if (task == n * b) {
      const Extent e = bank.low_pass_extent();
      ComplexGrid tmp(e);
      crop_filter(tmp, bank.low_pass_mask(), 0, scale(e, false));
      for (std::size_t i = 0; i < tmp.size(); ++i) dec.low_pass[i] = tmp[i].real();
    } else {
      ComplexGrid tmp(bank.finest());
      const double s = 1.0 / static_cast<double>(bank.finest().area());
      for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = spectrum[i] * (bank.high_pass_mask()[i] * s);
      fft::transform(tmp, fft::Direction::inverse);
      for (std::size_t i = 0; i < tmp.size(); ++i) dec.high_pass[i] = tmp[i].real();
    }
  }
  return dec;
}

}  // namespace

Decomposition decompose(const RealGrid& image, const FilterBank& bank) {
  require_same_extent(image.extent(), bank.finest(), "decompose");
  // Subbands sample the full-resolution band signal on the level grid, so
  // the inverse DFT of the cropped spectrum is divided by the full area.
  const double s = 1.0 / static_cast<double>(bank.finest().area());
  return analyze(fft::forward(image), bank, [s](Extent, bool) { return s; });
}

RealGrid reconstruct(const Decomposition& dec, const FilterBank& bank, bool include_high_pass) {
  require_compatible(dec, bank);
  const Extent full = bank.finest();
  const double area = static_cast<double>(full.area());
  const int n = bank.levels();
  const int b = bank.orientations();

  // Per-band filtered spectra on the crop grids, computed in parallel and
  // accumulated serially in a fixed order.
  std::vector<ComplexGrid> contributions(n * b + 1);
#pragma omp parallel for schedule(dynamic)
  for (int task = 0; task < n * b + 1; ++task) {
    const bool is_band = task < n * b;
    const Extent e = is_band ? bank.band_extent(task / b) : bank.low_pass_extent();
    const RealGrid& mask = is_band ? bank.band_mask(task / b, task % b) : bank.low_pass_mask();
    ComplexGrid spec(e);
    if (is_band) {
      const auto& values = dec.bands[task / b][task % b].values;
      for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = values[i];
    } else {
      for (std::size_t i = 0; i < spec.size(); ++i) spec[i] = dec.low_pass[i];
    }
    fft::transform(spec, fft::Direction::forward);
    const double scale = area / static_cast<double>(e.area());
    for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= mask[i] * scale;
    contributions[task] = std::move(spec);
  }

  ComplexGrid total(full);
  if (include_high_pass) {
    ComplexGrid high = fft::forward(dec.high_pass);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] = high[i] * bank.high_pass_mask()[i];
  }
  for (int task = 0; task < n * b + 1; ++task) {
    const bool is_band = task < n * b;
    const int schedule_index = is_band ? task / b + 1 : 0;
    const auto& rows = bank.row_map(schedule_index);
    const auto& cols = bank.col_map(schedule_index);
    const ComplexGrid& spec = contributions[task];
    for (int py = 0; py < spec.rows(); ++py) {
      for (int px = 0; px < spec.cols(); ++px) {
        const std::complex<double> z = spec(py, px);
        const int fy = rows[py];
        const int fx = cols[px];
        total(fy, fx) += z;
        // 2·Re of an analytic band adds the conjugate-mirrored spectrum.
        if (is_band) total((full.height - fy) % full.height, (full.width - fx) % full.width) += std::conj(z);
      }
    }
  }

  fft::transform(total, fft::Direction::inverse);
  RealGrid out(full);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = total[i].real() / area;
  return out;
}

Decomposition reconstruct_adjoint(const RealGrid& image_gradient, const FilterBank& bank) {
  require_same_extent(image_gradient.extent(), bank.finest(), "reconstruct_adjoint");
  // Bands: (2 / level area)·IDFT(crop(G·M)), the 2 from taking 2·Re.
  // Residuals: IDFT(crop(G·L)) / level area and IDFT(G·H) / full area.
  return analyze(fft::forward(image_gradient), bank,
                 [](Extent e, bool band) { return (band ? 2.0 : 1.0) / static_cast<double>(e.area()); });
}

}  // namespace phasenet

#pragma once

#include <complex>
#include <numbers>
#include <vector>

#include "phasenet/grid.hpp"

namespace phasenet {

/// Parameters of a complex steerable pyramid.
struct PyramidConfig {
  double scale_factor = std::numbers::sqrt2;  ///< λ, ratio between adjacent level resolutions
  int orientations = 4;                       ///< b
  int levels = 10;                            ///< n oriented levels
  double transition_width = 1.0;              ///< raised-cosine overlap, log_λ radial units, in (0, 1]

  void validate() const;
  friend bool operator==(const PyramidConfig&, const PyramidConfig&) = default;
};

/// Per-side resolutions for the low-pass residual and every oriented level,
/// coarsest first (n + 1 entries, the last equal to `finest`). A 256-pixel
/// side with λ = √2 follows the fixed published sequence 8, 12, 16, 22, 32,
/// 46, 64, 90, 128, 182, 256; other sides use r[k-1] = ceil(r[k] / λ).
std::vector<Extent> resolution_schedule(const PyramidConfig& config, Extent finest);

/// One complex oriented subband at its level resolution.
struct Subband {
  ComplexGrid values;
  int level = 0;
  int orientation = 0;
};

/// Argument in (-π, π]; defined as 0 at the origin.
double phase_of(std::complex<double> z);

RealGrid amplitude(const ComplexGrid& band);
RealGrid phase(const ComplexGrid& band);
inline RealGrid amplitude(const Subband& s) { return amplitude(s.values); }
inline RealGrid phase(const Subband& s) { return phase(s.values); }

class FilterBank;

/// Subbands indexed [level][orientation] with level 0 the coarsest oriented
/// level, plus the real low-pass (coarsest) and high-pass (finest) residuals.
struct Decomposition {
  PyramidConfig config;
  std::vector<std::vector<Subband>> bands;
  RealGrid low_pass;
  RealGrid high_pass;

  int levels() const { return static_cast<int>(bands.size()); }
  int orientations() const { return bands.empty() ? 0 : static_cast<int>(bands.front().size()); }

  static Decomposition zeros(const FilterBank& bank);
};

/// Frequency-domain masks of the pyramid for one image size. Masks of the
/// oriented bands and the low-pass residual are stored on their level's
/// (cropped) DFT grid; the high-pass mask lives on the full grid.
///
/// Radial windows are raised cosines in log_λ(ρ), where ρ is frequency
/// normalized so the Nyquist frequency of each axis is 1. Boundaries sit at
/// c·λ^-j; the scale c is the largest value for which every band fits
/// strictly inside its crop window. Angular windows are cos^(b-1) lobes on a
/// half-plane, so oriented bands are analytic and reconstruction takes 2·Re.
///
/// Immutable after construction; safe to share between threads.
class FilterBank {
 public:
  FilterBank(const PyramidConfig& config, Extent finest);

  const PyramidConfig& config() const { return config_; }
  Extent finest() const { return schedule_.back(); }
  const std::vector<Extent>& schedule() const { return schedule_; }
  int levels() const { return config_.levels; }
  int orientations() const { return config_.orientations; }

  /// Resolution of oriented level `level` (coarsest = 0).
  Extent band_extent(int level) const { return schedule_.at(level + 1); }
  Extent low_pass_extent() const { return schedule_.front(); }

  const RealGrid& band_mask(int level, int orientation) const { return band_masks_.at(level).at(orientation); }
  const RealGrid& low_pass_mask() const { return low_mask_; }
  const RealGrid& high_pass_mask() const { return high_mask_; }

  double radial_scale() const { return radial_scale_; }

  /// Geometric center of an oriented level's radial passband, in normalized
  /// frequency units (1 = Nyquist).
  double band_peak_frequency(int level) const;

  /// Analytic responses at normalized frequency (u, v) = (2·ky/H, 2·kx/W).
  double band_response(int level, int orientation, double u, double v) const;
  double low_pass_response(double u, double v) const;
  double high_pass_response(double u, double v) const;
  double angular_window(int orientation, double u, double v) const;

  /// max over all full-grid frequencies of |1 - Σ squared system responses|,
  /// counting each analytic band at f and at -f.
  double tiling_error() const;

  /// Largest analytic response outside a band's crop window (0 when every
  /// mask is representable at its level resolution).
  double support_leak() const;

  /// Mapping from crop-grid row/column to full-grid row/column, per schedule entry.
  const std::vector<int>& row_map(int schedule_index) const { return row_maps_.at(schedule_index); }
  const std::vector<int>& col_map(int schedule_index) const { return col_maps_.at(schedule_index); }

 private:
  double radial_band(int filter_index, double rho) const;
  double boundary(int j) const;

  PyramidConfig config_;
  std::vector<Extent> schedule_;
  double radial_scale_ = 1.0;
  double angular_norm_ = 1.0;
  std::vector<std::vector<RealGrid>> band_masks_;
  RealGrid low_mask_;
  RealGrid high_mask_;
  std::vector<std::vector<int>> row_maps_;
  std::vector<std::vector<int>> col_maps_;
};

/// Throws std::invalid_argument unless `dec` has the bank's level count,
/// orientation count and per-level shapes.
void require_compatible(const Decomposition& dec, const FilterBank& bank);

Decomposition decompose(const RealGrid& image, const FilterBank& bank);

/// Inverse of decompose. Output is not clamped.
RealGrid reconstruct(const Decomposition& dec, const FilterBank& bank, bool include_high_pass = true);

/// Transpose of reconstruct with respect to the real and imaginary parts of
/// every subband: for an image-space gradient g, each band holds
/// dL/dRe + i·dL/dIm and the residuals hold their real gradients.
Decomposition reconstruct_adjoint(const RealGrid& image_gradient, const FilterBank& bank);

}  // namespace phasenet

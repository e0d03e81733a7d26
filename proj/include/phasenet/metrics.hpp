#pragma once

#include "phasenet/image.hpp"

namespace phasenet {

inline constexpr double kDefaultPsnrCap = 99.0;

/// 10·log10(1 / MSE) over all pixels and channels; `cap` for identical
/// images (and as an upper bound).
double psnr(const Image& a, const Image& b, double cap = kDefaultPsnrCap);

struct SsimConfig {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Normalized 1-D Gaussian weights of the SSIM window.
std::vector<double> ssim_window(const SsimConfig& config);

/// Per-window SSIM map over every fully contained window position (no
/// padding), computed on luma for color inputs.
RealGrid ssim_map(const Image& a, const Image& b, const SsimConfig& config = {});

/// Mean of ssim_map.
double ssim(const Image& a, const Image& b, const SsimConfig& config = {});

}  // namespace phasenet

#include "phasenet/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace phasenet {

std::string to_string(Extent e) { return std::to_string(e.height) + "x" + std::to_string(e.width); }

Image::Image(int height, int width, int channels, double fill) : extent_{height, width} {
  if (channels < 1) throw std::invalid_argument("Image: channel count must be positive");
  planes_.assign(channels, RealGrid(height, width, fill));
}

Image::Image(RealGrid plane) : extent_(plane.extent()) { planes_.push_back(std::move(plane)); }

Image::Image(std::vector<RealGrid> planes) : planes_(std::move(planes)) {
  if (planes_.empty()) throw std::invalid_argument("Image: no channels");
  extent_ = planes_.front().extent();
  for (const auto& p : planes_) require_same_extent(p.extent(), extent_, "Image");
}

bool Image::all_finite() const {
  for (const auto& p : planes_)
    for (double v : p)
      if (!std::isfinite(v)) return false;
  return true;
}

void Image::require_finite() const {
  if (!all_finite()) throw std::domain_error("Image contains non-finite values");
}

Image Image::clamped() const {
  Image out = *this;
  for (auto& p : out.planes_)
    for (double& v : p) v = std::clamp(v, 0.0, 1.0);
  return out;
}

RealGrid Image::luma() const {
  if (channels() == 1) return planes_[0];
  if (channels() != 3) throw std::invalid_argument("Image::luma: expected 1 or 3 channels");
  RealGrid out(extent_);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 0.299 * planes_[0][i] + 0.587 * planes_[1][i] + 0.114 * planes_[2][i];
  return out;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  require_same_extent(a.extent(), b.extent(), what);
  if (a.channels() != b.channels())
    throw std::invalid_argument(std::string(what) + ": channel count mismatch");
}

}  // namespace phasenet

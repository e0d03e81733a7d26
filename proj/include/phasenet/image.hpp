#pragma once

#include <vector>

#include "phasenet/grid.hpp"

namespace phasenet {

/// Planar multi-channel image with real values; nominal range is [0, 1].
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);
  explicit Image(RealGrid plane);
  explicit Image(std::vector<RealGrid> planes);

  int height() const { return extent_.height; }
  int width() const { return extent_.width; }
  Extent extent() const { return extent_; }
  int channels() const { return static_cast<int>(planes_.size()); }
  bool empty() const { return planes_.empty(); }

  RealGrid& channel(int c) { return planes_.at(c); }
  const RealGrid& channel(int c) const { return planes_.at(c); }
  const std::vector<RealGrid>& planes() const { return planes_; }

  double& operator()(int y, int x, int c) { return planes_[c](y, x); }
  double operator()(int y, int x, int c) const { return planes_[c](y, x); }

  /// Throws if any value is NaN or infinite.
  void require_finite() const;
  bool all_finite() const;

  /// Copy with every value clamped to [0, 1].
  Image clamped() const;

  /// ITU-R BT.601 luma for 3-channel images; identity for one channel.
  RealGrid luma() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  Extent extent_{};
  std::vector<RealGrid> planes_;
};

void require_same_shape(const Image& a, const Image& b, const char* what);

}  // namespace phasenet

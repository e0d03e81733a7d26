#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace phasenet {

/// Channel-major (C×H×W) feature map of one sample.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {
    if (c < 0 || h < 0 || w < 0) throw std::invalid_argument("Tensor: negative dimensions");
  }

  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }
  double* channel(int c) { return data.data() + c * plane(); }
  const double* channel(int c) const { return data.data() + c * plane(); }
  double& operator()(int c, int y, int x) { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  double operator()(int c, int y, int x) const { return data[c * plane() + static_cast<std::size_t>(y) * width + x]; }

  bool same_shape(const Tensor& o) const { return channels == o.channels && height == o.height && width == o.width; }
  std::string shape_string() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width);
  }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace phasenet

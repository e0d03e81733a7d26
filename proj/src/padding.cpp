#include "phasenet/padding.hpp"

#include <stdexcept>

namespace phasenet {
namespace {

// Reflects an out-of-range index back into [0, n), repeating the edge
// sample, for any distance.
int reflect(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

}  // namespace

bool side_admits(int side, const PyramidConfig& config) {
  try {
    resolution_schedule(config, {side, side});
    return true;
  } catch (const std::invalid_argument&) {
    return false;
  }
}

Extent padded_canvas(Extent image, const PyramidConfig& config) {
  config.validate();
  auto side = [&](int n) {
    if (n < 1) throw std::invalid_argument("padding: empty image");
    long p = 1;
    while (p < n || !side_admits(static_cast<int>(p), config)) {
      p *= 2;
      if (p > (1L << 24)) throw std::invalid_argument("padding: no canvas supports the configured level count");
    }
    return static_cast<int>(p);
  };
  return {side(image.height), side(image.width)};
}

Padding plan_padding(Extent image, Extent canvas) {
  if (canvas.height < image.height || canvas.width < image.width)
    throw std::invalid_argument("padding: canvas " + to_string(canvas) + " smaller than image " + to_string(image));
  const int dh = canvas.height - image.height;
  const int dw = canvas.width - image.width;
  return {dh / 2, dh - dh / 2, dw / 2, dw - dw / 2};
}

RealGrid mirror_pad(const RealGrid& grid, const Padding& pad) {
  const int h = grid.rows();
  const int w = grid.cols();
  if (h < 1 || w < 1) throw std::invalid_argument("padding: empty image");
  RealGrid out(h + pad.top + pad.bottom, w + pad.left + pad.right);
  for (int y = 0; y < out.rows(); ++y) {
    const int sy = reflect(y - pad.top, h);
    for (int x = 0; x < out.cols(); ++x) out(y, x) = grid(sy, reflect(x - pad.left, w));
  }
  return out;
}

Image mirror_pad(const Image& image, const Padding& pad) {
  std::vector<RealGrid> planes;
  for (const auto& p : image.planes()) planes.push_back(mirror_pad(p, pad));
  return Image(std::move(planes));
}

Image crop(const Image& image, const Padding& pad) {
  const int h = image.height() - pad.top - pad.bottom;
  const int w = image.width() - pad.left - pad.right;
  if (h < 1 || w < 1) throw std::invalid_argument("crop: padding exceeds the image");
  std::vector<RealGrid> planes;
  for (const auto& p : image.planes()) {
    RealGrid g(h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) g(y, x) = p(y + pad.top, x + pad.left);
    planes.push_back(std::move(g));
  }
  return Image(std::move(planes));
}

}  // namespace phasenet

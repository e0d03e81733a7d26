#pragma once

#include "phasenet/image.hpp"
#include "phasenet/pyramid.hpp"

namespace phasenet {

/// Mirror padding of an image onto a larger canvas.
struct Padding {
  int top = 0;
  int bottom = 0;
  int left = 0;
  int right = 0;

  bool none() const { return top == 0 && bottom == 0 && left == 0 && right == 0; }
};

/// True when `side` supports the configured level count.
bool side_admits(int side, const PyramidConfig& config);

/// Per side, the smallest power of two ≥ the image side whose schedule
/// supports the level count (1280×720 at 14 levels → 2048×1024).
Extent padded_canvas(Extent image, const PyramidConfig& config);

/// Splits the margin evenly; odd remainders go to the bottom and right.
Padding plan_padding(Extent image, Extent canvas);

/// Symmetric (edge-including) mirror padding.
Image mirror_pad(const Image& image, const Padding& pad);
RealGrid mirror_pad(const RealGrid& grid, const Padding& pad);

Image crop(const Image& image, const Padding& pad);

}  // namespace phasenet

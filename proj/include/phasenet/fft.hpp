#pragma once

#include "phasenet/grid.hpp"

namespace phasenet::fft {

enum class Direction { forward, inverse };

/// In-place unnormalized 2-D DFT. Forward uses e^{-2πi k·x/N}; inverse uses
/// e^{+2πi k·x/N} without the 1/N factor. Safe to call concurrently.
void transform(ComplexGrid& grid, Direction direction);

ComplexGrid forward(const RealGrid& grid);

/// Signed frequency index for DFT position i of an n-point transform:
/// 0, 1, ..., ceil(n/2)-1, -floor(n/2), ..., -1.
constexpr int signed_index(int i, int n) { return i < (n + 1) / 2 ? i : i - n; }

/// Position of signed frequency k in an n-point transform.
constexpr int position(int k, int n) { return k >= 0 ? k : k + n; }

}  // namespace phasenet::fft

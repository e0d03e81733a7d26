#pragma once

#include "phasenet/image.hpp"
#include "phasenet/pyramid.hpp"

namespace phasenet {

/// Wrapped angular midpoint φ1 + ½·wrap(φ2 - φ1), in (-π, π]. When the two
/// phases are exactly opposite the midpoint is taken a quarter turn forward
/// of φ1.
double phase_midpoint(double phi1, double phi2);

/// Training-free midpoint decomposition: midpoint phases, mean amplitudes,
/// mean low-pass residual and a zero high-pass residual.
Decomposition naive_phase_decomposition(const Decomposition& first, const Decomposition& second);

/// Reconstruction of naive_phase_decomposition. Not clamped.
RealGrid naive_phase_interpolate(const Decomposition& first, const Decomposition& second, const FilterBank& bank);

/// Channel-by-channel naive phase interpolation of two frames, clamped.
Image naive_phase_interpolate(const Image& first, const Image& second, const FilterBank& bank);

/// Pixelwise mean of the two frames.
Image average_interpolate(const Image& first, const Image& second);

}  // namespace phasenet

#pragma once

#include "phasenet/image.hpp"
#include "phasenet/network.hpp"
#include "phasenet/pyramid.hpp"

namespace phasenet {

/// Divisor floor when normalizing amplitudes and residuals.
inline constexpr double kNormalizationFloor = 1e-8;

NetworkConfig network_config_for(const PyramidConfig& pyramid, int features = 64);

/// Network input for one sample. Block 0 holds both low-pass residuals
/// divided by their joint max magnitude; block j+1 holds, for level j,
/// [φ¹/π for every orientation, A¹, φ²/π, A²] with amplitudes divided by the
/// level's max over both frames and all orientations.
NetworkInput normalize_inputs(const Decomposition& first, const Decomposition& second);

/// φ̂ = π·raw for orientation θ of a block ≥ 1 (unwrapped).
RealGrid predicted_phase(const Tensor& raw, int orientation);

/// Writes the part of R̂ owned by `block` (0 = low-pass, b = level b-1):
/// r̂_l = α·r¹ + (1-α)·r², subbands Â·e^{iφ̂} with Â = β·A¹ + (1-β)·A²,
/// φ̂ = π·raw and α, β = (raw + 1)/2.
void remap_block(const Tensor& raw, int block, const Decomposition& first, const Decomposition& second,
                 Decomposition& out);

/// Full remap; raw must cover every block of the decomposition. r̂_h = 0.
Decomposition remap(const RawPrediction& raw, const Decomposition& first, const Decomposition& second);

/// dL/d(raw) for one block given dL/dR̂ in the layout of reconstruct_adjoint
/// (bands hold dL/dRe + i·dL/dIm).
Tensor remap_block_backward(const Tensor& raw, int block, const Decomposition& first, const Decomposition& second,
                            const Decomposition& grad);

/// One channel: decompose, normalize, eval forward, remap, reconstruct without
/// the high-pass residual. Not clamped.
RealGrid interpolate_channel(const RealGrid& first, const RealGrid& second, const Network& net,
                             const FilterBank& bank);

/// Channel-by-channel interpolation with shared weights, clamped to [0, 1].
Image interpolate(const Image& first, const Image& second, const Network& net, const FilterBank& bank);

}  // namespace phasenet

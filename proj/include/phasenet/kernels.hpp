#pragma once

#include <span>
#include <vector>

#include "phasenet/tensor.hpp"

// Numeric kernels of the decoder network. `phasenet::kernels` holds the
// OpenMP/GEMM versions used in production; `phasenet::reference` (see
// reference_kernels.hpp) holds plain loops with identical signatures that the
// tests compare against.
//
// Parallel versions partition work into fixed tiles whose boundaries do not
// depend on the thread count, and reduce partial sums in tile order, so
// results are bitwise reproducible for any number of threads.

namespace phasenet::kernels {

/// Same-padded (zero) 2-D cross-correlation. `weight` is [out][in][k][k]
/// row-major, `bias` has `out_channels` entries (may be empty). `output` is
/// resized as needed.
void conv2d(const Tensor& input, std::span<const double> weight, std::span<const double> bias, int out_channels,
            int kernel, Tensor& output);

/// Backward of conv2d. Adds into grad_weight and grad_bias (grad_bias may be
/// empty); overwrites *grad_input when it is non-null.
void conv2d_backward(const Tensor& input, const Tensor& grad_output, std::span<const double> weight, int kernel,
                     Tensor* grad_input, std::span<double> grad_weight, std::span<double> grad_bias);

/// Bilinear resize with half-pixel centers and edge clamping.
void resize_bilinear(const Tensor& input, int height, int width, Tensor& output);

/// Adjoint of resize_bilinear; grad_input must already have the input shape
/// and is overwritten.
void resize_bilinear_backward(const Tensor& grad_output, Tensor& grad_input);

/// Per-channel mean and biased variance over every sample and pixel.
struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> variance;
  std::size_t count = 0;
};
ChannelStats channel_stats(const std::vector<Tensor>& batch);

/// x ← (x - mean) / sqrt(variance + eps), in place.
void normalize(Tensor& x, std::span<const double> mean, std::span<const double> variance, double eps);

/// Backward of batch normalization in training mode given the normalized
/// activations x̂ and dL/dy where y = γ·x̂ + β. Overwrites `grad` (dL/dy) with
/// dL/dx and adds into grad_gamma / grad_beta.
void batch_norm_backward(const std::vector<Tensor>& normalized, std::vector<Tensor>& grad, std::span<const double> gamma,
                         std::span<const double> variance, double eps, std::span<double> grad_gamma,
                         std::span<double> grad_beta);

}  // namespace phasenet::kernels

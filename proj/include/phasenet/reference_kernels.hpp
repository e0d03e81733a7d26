#pragma once

#include "phasenet/kernels.hpp"

// Serial loop implementations of every kernel in kernels.hpp. Slow and
// obvious by design; used as test oracles and benchmark baselines.

namespace phasenet::reference {

using kernels::ChannelStats;

void conv2d(const Tensor& input, std::span<const double> weight, std::span<const double> bias, int out_channels,
            int kernel, Tensor& output);
void conv2d_backward(const Tensor& input, const Tensor& grad_output, std::span<const double> weight, int kernel,
                     Tensor* grad_input, std::span<double> grad_weight, std::span<double> grad_bias);
void resize_bilinear(const Tensor& input, int height, int width, Tensor& output);
void resize_bilinear_backward(const Tensor& grad_output, Tensor& grad_input);
ChannelStats channel_stats(const std::vector<Tensor>& batch);
void normalize(Tensor& x, std::span<const double> mean, std::span<const double> variance, double eps);
void batch_norm_backward(const std::vector<Tensor>& normalized, std::vector<Tensor>& grad, std::span<const double> gamma,
                         std::span<const double> variance, double eps, std::span<double> grad_gamma,
                         std::span<double> grad_beta);

}  // namespace phasenet::reference

#include "phasenet/reference_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phasenet::reference {
namespace {

std::size_t weight_index(int o, int c, int dy, int dx, int in_channels, int kernel) {
  return ((static_cast<std::size_t>(o) * in_channels + c) * kernel + dy) * kernel + dx;
}

// Source coordinate and weights of one bilinear output sample along an axis.
void sample(int d, int in, int out, int& lo, int& hi, double& frac) {
  double src = (d + 0.5) * static_cast<double>(in) / out - 0.5;
  if (src < 0.0) src = 0.0;
  lo = static_cast<int>(std::floor(src));
  if (lo > in - 1) lo = in - 1;
  hi = lo + 1 < in ? lo + 1 : in - 1;
  frac = src - lo;
}

}  // namespace

void conv2d(const Tensor& input, std::span<const double> weight, std::span<const double> bias, int out_channels,
            int kernel, Tensor& output) {
  if (weight.size() != static_cast<std::size_t>(out_channels) * input.channels * kernel * kernel)
    throw std::invalid_argument("reference::conv2d: weight size mismatch");
  output = Tensor(out_channels, input.height, input.width);
  const int r = kernel / 2;
  for (int o = 0; o < out_channels; ++o)
    for (int y = 0; y < input.height; ++y)
      for (int x = 0; x < input.width; ++x) {
        double s = bias.empty() ? 0.0 : bias[o];
        for (int c = 0; c < input.channels; ++c)
          for (int dy = 0; dy < kernel; ++dy)
            for (int dx = 0; dx < kernel; ++dx) {
              const int sy = y + dy - r;
              const int sx = x + dx - r;
              if (sy < 0 || sy >= input.height || sx < 0 || sx >= input.width) continue;
              s += weight[weight_index(o, c, dy, dx, input.channels, kernel)] * input(c, sy, sx);
            }
        output(o, y, x) = s;
      }
}

void conv2d_backward(const Tensor& input, const Tensor& grad_output, std::span<const double> weight, int kernel,
                     Tensor* grad_input, std::span<double> grad_weight, std::span<double> grad_bias) {
  const int r = kernel / 2;
  if (grad_input) *grad_input = Tensor(input.channels, input.height, input.width);
  for (int o = 0; o < grad_output.channels; ++o)
    for (int y = 0; y < input.height; ++y)
      for (int x = 0; x < input.width; ++x) {
        const double g = grad_output(o, y, x);
        if (!grad_bias.empty()) grad_bias[o] += g;
        for (int c = 0; c < input.channels; ++c)
          for (int dy = 0; dy < kernel; ++dy)
            for (int dx = 0; dx < kernel; ++dx) {
              const int sy = y + dy - r;
              const int sx = x + dx - r;
              if (sy < 0 || sy >= input.height || sx < 0 || sx >= input.width) continue;
              const std::size_t wi = weight_index(o, c, dy, dx, input.channels, kernel);
              grad_weight[wi] += g * input(c, sy, sx);
              if (grad_input) (*grad_input)(c, sy, sx) += g * weight[wi];
            }
      }
}

void resize_bilinear(const Tensor& input, int height, int width, Tensor& output) {
  output = Tensor(input.channels, height, width);
  for (int c = 0; c < input.channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        int y0, y1, x0, x1;
        double fy, fx;
        sample(y, input.height, height, y0, y1, fy);
        sample(x, input.width, width, x0, x1, fx);
        output(c, y, x) = (1 - fy) * (1 - fx) * input(c, y0, x0) + (1 - fy) * fx * input(c, y0, x1) +
                          fy * (1 - fx) * input(c, y1, x0) + fy * fx * input(c, y1, x1);
      }
}

void resize_bilinear_backward(const Tensor& grad_output, Tensor& grad_input) {
  std::fill(grad_input.data.begin(), grad_input.data.end(), 0.0);
  for (int c = 0; c < grad_output.channels; ++c)
    for (int y = 0; y < grad_output.height; ++y)
      for (int x = 0; x < grad_output.width; ++x) {
        int y0, y1, x0, x1;
        double fy, fx;
        sample(y, grad_input.height, grad_output.height, y0, y1, fy);
        sample(x, grad_input.width, grad_output.width, x0, x1, fx);
        const double g = grad_output(c, y, x);
        grad_input(c, y0, x0) += (1 - fy) * (1 - fx) * g;
        grad_input(c, y0, x1) += (1 - fy) * fx * g;
        grad_input(c, y1, x0) += fy * (1 - fx) * g;
        grad_input(c, y1, x1) += fy * fx * g;
      }
}

ChannelStats channel_stats(const std::vector<Tensor>& batch) {
  ChannelStats s;
  const int channels = batch.at(0).channels;
  s.mean.assign(channels, 0.0);
  s.variance.assign(channels, 0.0);
  s.count = batch.size() * batch[0].plane();
  for (int c = 0; c < channels; ++c) {
    for (const auto& t : batch)
      for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x) s.mean[c] += t(c, y, x);
    s.mean[c] /= static_cast<double>(s.count);
    for (const auto& t : batch)
      for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x) s.variance[c] += (t(c, y, x) - s.mean[c]) * (t(c, y, x) - s.mean[c]);
    s.variance[c] /= static_cast<double>(s.count);
  }
  return s;
}

void normalize(Tensor& x, std::span<const double> mean, std::span<const double> variance, double eps) {
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < x.height; ++y)
      for (int i = 0; i < x.width; ++i) x(c, y, i) = (x(c, y, i) - mean[c]) / std::sqrt(variance[c] + eps);
}

void batch_norm_backward(const std::vector<Tensor>& normalized, std::vector<Tensor>& grad, std::span<const double> gamma,
                         std::span<const double> variance, double eps, std::span<double> grad_gamma,
                         std::span<double> grad_beta) {
  const int channels = normalized.at(0).channels;
  const double count = static_cast<double>(normalized.size() * normalized[0].plane());
  for (int c = 0; c < channels; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t b = 0; b < grad.size(); ++b)
      for (int y = 0; y < grad[b].height; ++y)
        for (int x = 0; x < grad[b].width; ++x) {
          sum_g += grad[b](c, y, x);
          sum_gx += grad[b](c, y, x) * normalized[b](c, y, x);
        }
    grad_beta[c] += sum_g;
    grad_gamma[c] += sum_gx;
    const double inv_std = 1.0 / std::sqrt(variance[c] + eps);
    for (std::size_t b = 0; b < grad.size(); ++b)
      for (int y = 0; y < grad[b].height; ++y)
        for (int x = 0; x < grad[b].width; ++x)
          grad[b](c, y, x) =
              gamma[c] * inv_std * (grad[b](c, y, x) - sum_g / count - normalized[b](c, y, x) * sum_gx / count);
  }
}

}  // namespace phasenet::reference

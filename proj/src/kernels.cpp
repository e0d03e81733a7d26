#include "phasenet/kernels.hpp"

#define EIGEN_DONT_PARALLELIZE
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace phasenet::kernels {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using PlaneMap = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstPlaneMap = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

// Pixels per GEMM tile. Fixed so tiling never depends on the thread count.
constexpr int kTilePixels = 2048;
// Upper bound on per-tile weight-gradient buffers alive at once.
constexpr int kMaxPartials = 32;

struct Tiling {
  int rows_per_tile;
  int count;
};

Tiling tiling(int height, int width) {
  const int rows = std::max(1, kTilePixels / std::max(1, width));
  return {rows, (height + rows - 1) / rows};
}

void check_conv(const Tensor& input, std::span<const double> weight, std::span<const double> bias, int out_channels,
                int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("conv2d: kernel size must be odd and positive");
  const std::size_t expected = static_cast<std::size_t>(out_channels) * input.channels * kernel * kernel;
  if (weight.size() != expected) {
    throw std::invalid_argument("conv2d: weight has " + std::to_string(weight.size()) + " values, expected " +
                                std::to_string(expected) + " for input " + input.shape_string());
  }
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(out_channels))
    throw std::invalid_argument("conv2d: bias size mismatch");
}

// Column matrix (C·k·k) × (rows y0..y1 of the image) for a same-padded k×k
// window, zero outside the image.
void im2col(const Tensor& in, int kernel, int y0, int y1, std::vector<double>& col) {
  const int r = kernel / 2;
  const int w = in.width;
  const std::size_t pixels = static_cast<std::size_t>(y1 - y0) * w;
  col.resize(pixels * in.channels * kernel * kernel);
  double* dst = col.data();
  for (int c = 0; c < in.channels; ++c) {
    const double* src = in.channel(c);
    for (int dy = 0; dy < kernel; ++dy) {
      for (int dx = 0; dx < kernel; ++dx) {
        for (int y = y0; y < y1; ++y) {
          const int sy = y + dy - r;
          if (sy < 0 || sy >= in.height) {
            std::fill(dst, dst + w, 0.0);
            dst += w;
            continue;
          }
          const double* row = src + static_cast<std::size_t>(sy) * w;
          for (int x = 0; x < w; ++x) {
            const int sx = x + dx - r;
            *dst++ = (sx >= 0 && sx < w) ? row[sx] : 0.0;
          }
        }
      }
    }
  }
}

struct AxisSamples {
  std::vector<int> lo;
  std::vector<int> hi;
  std::vector<double> frac;
};

AxisSamples axis_samples(int in, int out) {
  AxisSamples s;
  s.lo.resize(out);
  s.hi.resize(out);
  s.frac.resize(out);
  const double scale = static_cast<double>(in) / out;
  for (int d = 0; d < out; ++d) {
    const double src = std::max(0.0, (d + 0.5) * scale - 0.5);
    const int lo = std::min(static_cast<int>(src), in - 1);
    s.lo[d] = lo;
    s.hi[d] = std::min(lo + 1, in - 1);
    s.frac[d] = src - lo;
  }
  return s;
}

}  // namespace

void conv2d(const Tensor& input, std::span<const double> weight, std::span<const double> bias, int out_channels,
            int kernel, Tensor& output) {
  check_conv(input, weight, bias, out_channels, kernel);
  if (!(output.channels == out_channels && output.height == input.height && output.width == input.width))
    output = Tensor(out_channels, input.height, input.width);
  if (input.plane() == 0) return;

  const int k_dim = input.channels * kernel * kernel;
  const auto hw = static_cast<Eigen::Index>(input.plane());
  const ConstMatrixMap w(weight.data(), out_channels, k_dim);
  const Tiling tiles = tiling(input.height, input.width);

#pragma omp parallel
  {
    std::vector<double> col;
#pragma omp for schedule(static)
    for (int t = 0; t < tiles.count; ++t) {
      const int y0 = t * tiles.rows_per_tile;
      const int y1 = std::min(input.height, y0 + tiles.rows_per_tile);
      const Eigen::Index pixels = static_cast<Eigen::Index>(y1 - y0) * input.width;
      const std::size_t offset = static_cast<std::size_t>(y0) * input.width;
      PlaneMap out(output.data.data() + offset, out_channels, pixels, Eigen::OuterStride<>(hw));
      if (kernel == 1) {
        ConstPlaneMap x(input.data.data() + offset, input.channels, pixels, Eigen::OuterStride<>(hw));
        out.noalias() = w * x;
      } else {
        im2col(input, kernel, y0, y1, col);
        out.noalias() = w * ConstMatrixMap(col.data(), k_dim, pixels);
      }
      if (!bias.empty())
        for (int o = 0; o < out_channels; ++o) out.row(o).array() += bias[o];
    }
  }
}

void conv2d_backward(const Tensor& input, const Tensor& grad_output, std::span<const double> weight, int kernel,
                     Tensor* grad_input, std::span<double> grad_weight, std::span<double> grad_bias) {
  const int out_channels = grad_output.channels;
  check_conv(input, weight, std::span<const double>(grad_bias.data(), grad_bias.size()), out_channels, kernel);
  if (grad_weight.size() != weight.size()) throw std::invalid_argument("conv2d_backward: grad_weight size mismatch");
  if (grad_output.height != input.height || grad_output.width != input.width)
    throw std::invalid_argument("conv2d_backward: gradient shape " + grad_output.shape_string() +
                                " does not match input " + input.shape_string());

  const int in_channels = input.channels;
  if (grad_input) {
    // dL/dx is a same-padded correlation of dL/dy with the spatially flipped,
    // channel-transposed kernel.
    std::vector<double> flipped(weight.size());
    for (int o = 0; o < out_channels; ++o)
      for (int c = 0; c < in_channels; ++c)
        for (int dy = 0; dy < kernel; ++dy)
          for (int dx = 0; dx < kernel; ++dx)
            flipped[((static_cast<std::size_t>(c) * out_channels + o) * kernel + dy) * kernel + dx] =
                weight[((static_cast<std::size_t>(o) * in_channels + c) * kernel + (kernel - 1 - dy)) * kernel +
                       (kernel - 1 - dx)];
    conv2d(grad_output, flipped, {}, in_channels, kernel, *grad_input);
  }
  if (input.plane() == 0) return;

  const std::size_t hw = input.plane();
  if (!grad_bias.empty()) {
    for (int o = 0; o < out_channels; ++o) {
      const double* g = grad_output.channel(o);
      double s = 0.0;
      for (std::size_t i = 0; i < hw; ++i) s += g[i];
      grad_bias[o] += s;
    }
  }

  const int k_dim = in_channels * kernel * kernel;
  const Tiling tiles = tiling(input.height, input.width);
  MatrixMap gw(grad_weight.data(), out_channels, k_dim);
  std::vector<RowMatrix> partial(std::min(tiles.count, kMaxPartials));
  for (int first = 0; first < tiles.count; first += kMaxPartials) {
    const int last = std::min(tiles.count, first + kMaxPartials);
#pragma omp parallel
    {
      std::vector<double> col;
#pragma omp for schedule(static)
      for (int t = first; t < last; ++t) {
        const int y0 = t * tiles.rows_per_tile;
        const int y1 = std::min(input.height, y0 + tiles.rows_per_tile);
        const Eigen::Index pixels = static_cast<Eigen::Index>(y1 - y0) * input.width;
        const std::size_t offset = static_cast<std::size_t>(y0) * input.width;
        const auto stride = Eigen::OuterStride<>(static_cast<Eigen::Index>(hw));
        ConstPlaneMap g(grad_output.data.data() + offset, out_channels, pixels, stride);
        if (kernel == 1) {
          ConstPlaneMap x(input.data.data() + offset, in_channels, pixels, stride);
          partial[t - first].noalias() = g * x.transpose();
        } else {
          im2col(input, kernel, y0, y1, col);
          partial[t - first].noalias() = g * ConstMatrixMap(col.data(), k_dim, pixels).transpose();
        }
      }
    }
    for (int t = first; t < last; ++t) gw += partial[t - first];
  }
}

void resize_bilinear(const Tensor& input, int height, int width, Tensor& output) {
  if (height < 1 || width < 1 || input.height < 1 || input.width < 1)
    throw std::invalid_argument("resize_bilinear: empty extent");
  if (!(output.channels == input.channels && output.height == height && output.width == width))
    output = Tensor(input.channels, height, width);
  const AxisSamples ys = axis_samples(input.height, height);
  const AxisSamples xs = axis_samples(input.width, width);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < input.channels; ++c) {
    const double* src = input.channel(c);
    double* dst = output.channel(c);
    for (int y = 0; y < height; ++y) {
      const double* r0 = src + static_cast<std::size_t>(ys.lo[y]) * input.width;
      const double* r1 = src + static_cast<std::size_t>(ys.hi[y]) * input.width;
      const double fy = ys.frac[y];
      for (int x = 0; x < width; ++x) {
        const double fx = xs.frac[x];
        const double top = (1.0 - fx) * r0[xs.lo[x]] + fx * r0[xs.hi[x]];
        const double bottom = (1.0 - fx) * r1[xs.lo[x]] + fx * r1[xs.hi[x]];
        dst[static_cast<std::size_t>(y) * width + x] = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
}

void resize_bilinear_backward(const Tensor& grad_output, Tensor& grad_input) {
  if (grad_input.channels != grad_output.channels)
    throw std::invalid_argument("resize_bilinear_backward: channel mismatch");
  const AxisSamples ys = axis_samples(grad_input.height, grad_output.height);
  const AxisSamples xs = axis_samples(grad_input.width, grad_output.width);
  const int w_in = grad_input.width;
#pragma omp parallel for schedule(static)
  for (int c = 0; c < grad_output.channels; ++c) {
    const double* g = grad_output.channel(c);
    double* dst = grad_input.channel(c);
    std::fill(dst, dst + grad_input.plane(), 0.0);
    for (int y = 0; y < grad_output.height; ++y) {
      double* r0 = dst + static_cast<std::size_t>(ys.lo[y]) * w_in;
      double* r1 = dst + static_cast<std::size_t>(ys.hi[y]) * w_in;
      const double fy = ys.frac[y];
      for (int x = 0; x < grad_output.width; ++x) {
        const double v = g[static_cast<std::size_t>(y) * grad_output.width + x];
        const double fx = xs.frac[x];
        r0[xs.lo[x]] += (1.0 - fy) * (1.0 - fx) * v;
        r0[xs.hi[x]] += (1.0 - fy) * fx * v;
        r1[xs.lo[x]] += fy * (1.0 - fx) * v;
        r1[xs.hi[x]] += fy * fx * v;
      }
    }
  }
}

ChannelStats channel_stats(const std::vector<Tensor>& batch) {
  if (batch.empty()) throw std::invalid_argument("channel_stats: empty batch");
  const int channels = batch.front().channels;
  for (const auto& t : batch)
    if (!t.same_shape(batch.front())) throw std::invalid_argument("channel_stats: ragged batch");
  ChannelStats s;
  s.mean.assign(channels, 0.0);
  s.variance.assign(channels, 0.0);
  s.count = batch.size() * batch.front().plane();
  if (s.count == 0) return s;
  const std::size_t hw = batch.front().plane();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    double sum = 0.0;
    for (const auto& t : batch) {
      const double* p = t.channel(c);
      for (std::size_t i = 0; i < hw; ++i) sum += p[i];
    }
    const double mean = sum / static_cast<double>(s.count);
    double sq = 0.0;
    for (const auto& t : batch) {
      const double* p = t.channel(c);
      for (std::size_t i = 0; i < hw; ++i) sq += (p[i] - mean) * (p[i] - mean);
    }
    s.mean[c] = mean;
    s.variance[c] = sq / static_cast<double>(s.count);
  }
  return s;
}

void normalize(Tensor& x, std::span<const double> mean, std::span<const double> variance, double eps) {
  const std::size_t hw = x.plane();
#pragma omp parallel for schedule(static)
  for (int c = 0; c < x.channels; ++c) {
    const double m = mean[c];
    const double inv = 1.0 / std::sqrt(variance[c] + eps);
    double* p = x.channel(c);
    for (std::size_t i = 0; i < hw; ++i) p[i] = (p[i] - m) * inv;
  }
}

void batch_norm_backward(const std::vector<Tensor>& normalized, std::vector<Tensor>& grad, std::span<const double> gamma,
                         std::span<const double> variance, double eps, std::span<double> grad_gamma,
                         std::span<double> grad_beta) {
  if (normalized.size() != grad.size() || normalized.empty())
    throw std::invalid_argument("batch_norm_backward: batch size mismatch");
  const int channels = normalized.front().channels;
  const std::size_t hw = normalized.front().plane();
  const double count = static_cast<double>(normalized.size() * hw);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < channels; ++c) {
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (std::size_t b = 0; b < grad.size(); ++b) {
      const double* g = grad[b].channel(c);
      const double* xh = normalized[b].channel(c);
      for (std::size_t i = 0; i < hw; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
    }
    grad_beta[c] += sum_g;
    grad_gamma[c] += sum_gx;
    const double scale = gamma[c] / std::sqrt(variance[c] + eps);
    const double mean_g = sum_g / count;
    const double mean_gx = sum_gx / count;
    for (std::size_t b = 0; b < grad.size(); ++b) {
      double* g = grad[b].channel(c);
      const double* xh = normalized[b].channel(c);
      for (std::size_t i = 0; i < hw; ++i) g[i] = scale * (g[i] - mean_g - xh[i] * mean_gx);
    }
  }
}

}  // namespace phasenet::kernels

#include "phasenet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace phasenet {
namespace {

// Valid-mode separable filtering: rows first, then columns.
RealGrid filter_valid(const RealGrid& in, const std::vector<double>& w) {
  const int k = static_cast<int>(w.size());
  const int oh = in.rows() - k + 1;
  const int ow = in.cols() - k + 1;
  RealGrid rows(in.rows(), ow);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < in.rows(); ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += w[i] * in(y, x + i);
      rows(y, x) = s;
    }
  RealGrid out(oh, ow);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += w[i] * rows(y + i, x);
      out(y, x) = s;
    }
  return out;
}

RealGrid product(const RealGrid& a, const RealGrid& b) {
  RealGrid out(a.extent());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, double cap) {
  require_same_shape(a, b, "psnr");
  if (a.empty() || a.height() == 0 || a.width() == 0) throw std::invalid_argument("psnr: empty image");
  double sum = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    const RealGrid& p = a.channel(c);
    const RealGrid& q = b.channel(c);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = p[i] - q[i];
      sum += d * d;
    }
    count += p.size();
  }
  const double mse = sum / static_cast<double>(count);
  if (mse == 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(1.0 / mse));
}

std::vector<double> ssim_window(const SsimConfig& config) {
  if (config.window < 1 || config.window % 2 == 0) throw std::invalid_argument("ssim: window must be odd and >= 1");
  if (!(config.sigma > 0.0)) throw std::invalid_argument("ssim: sigma must be > 0");
  std::vector<double> w(config.window);
  const int r = config.window / 2;
  double total = 0.0;
  for (int i = 0; i < config.window; ++i) {
    const double d = i - r;
    total += (w[i] = std::exp(-d * d / (2.0 * config.sigma * config.sigma)));
  }
  for (double& v : w) v /= total;
  return w;
}

RealGrid ssim_map(const Image& a, const Image& b, const SsimConfig& config) {
  require_same_shape(a, b, "ssim");
  if (a.height() < config.window || a.width() < config.window)
    throw std::invalid_argument("ssim: image " + to_string(a.extent()) + " is smaller than the " +
                                std::to_string(config.window) + "-pixel window");
  const std::vector<double> w = ssim_window(config);
  const RealGrid x = a.luma();
  const RealGrid y = b.luma();
  const RealGrid mx = filter_valid(x, w);
  const RealGrid my = filter_valid(y, w);
  const RealGrid sxx = filter_valid(product(x, x), w);
  const RealGrid syy = filter_valid(product(y, y), w);
  const RealGrid sxy = filter_valid(product(x, y), w);
  const double c1 = std::pow(config.k1 * config.dynamic_range, 2);
  const double c2 = std::pow(config.k2 * config.dynamic_range, 2);

  RealGrid out(mx.extent());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    out[i] = ((2.0 * (mx[i] * my[i]) + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return out;
}

double ssim(const Image& a, const Image& b, const SsimConfig& config) {
  const RealGrid m = ssim_map(a, b, config);
  double s = 0.0;
  for (double v : m) s += v;
  return s / static_cast<double>(m.size());
}

}  // namespace phasenet

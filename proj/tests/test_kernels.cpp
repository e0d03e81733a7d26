#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <random>

#include "phasenet/kernels.hpp"
#include "phasenet/reference_kernels.hpp"

namespace phasenet {
namespace {

Tensor random_tensor(int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Tensor t(c, h, w);
  for (double& v : t.data) v = g(rng);
  return t;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  EXPECT_EQ(a.size(), b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct ConvCase {
  int in, out, kernel, h, w;
};

class ConvAgreement : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvAgreement, ForwardAndBackwardMatchReference) {
  const auto p = GetParam();
  const Tensor x = random_tensor(p.in, p.h, p.w, 1);
  const auto w = random_vector(static_cast<std::size_t>(p.out) * p.in * p.kernel * p.kernel, 2);
  const auto b = random_vector(p.out, 3);
  Tensor y, y_ref;
  kernels::conv2d(x, w, b, p.out, p.kernel, y);
  reference::conv2d(x, w, b, p.out, p.kernel, y_ref);
  ASSERT_TRUE(y.same_shape(y_ref));
  EXPECT_LT(max_abs_diff(y.data, y_ref.data), 1e-11);

  const Tensor gy = random_tensor(p.out, p.h, p.w, 4);
  std::vector<double> gw(w.size(), 0.5), gw_ref(w.size(), 0.5), gb(b.size(), 0.25), gb_ref(b.size(), 0.25);
  Tensor gx, gx_ref;
  kernels::conv2d_backward(x, gy, w, p.kernel, &gx, gw, gb);
  reference::conv2d_backward(x, gy, w, p.kernel, &gx_ref, gw_ref, gb_ref);
  EXPECT_LT(max_abs_diff(gx.data, gx_ref.data), 1e-10);
  EXPECT_LT(max_abs_diff(gw, gw_ref), 1e-9);
  EXPECT_LT(max_abs_diff(gb, gb_ref), 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvAgreement,
                         ::testing::Values(ConvCase{2, 8, 1, 8, 8}, ConvCase{7, 5, 3, 13, 9}, ConvCase{16, 16, 3, 70, 66},
                                           ConvCase{3, 4, 3, 1, 1}, ConvCase{4, 6, 1, 50, 47}),
                         [](const ::testing::TestParamInfo<ConvCase>& i) {
                           const ConvCase& c = i.param;
                           return std::to_string(c.in) + "to" + std::to_string(c.out) + "_k" + std::to_string(c.kernel) +
                                  "_" + std::to_string(c.h) + "x" + std::to_string(c.w);
                         });

TEST(Conv, ReferenceMatchesHandComputedValue) {
  // 1 input channel, 3×3 ones kernel: each output sums its zero-padded neighborhood.
  Tensor x(1, 3, 3);
  for (int i = 0; i < 9; ++i) x.data[i] = i + 1;
  const std::vector<double> w(9, 1.0), b{0.5};
  Tensor y;
  reference::conv2d(x, w, b, 1, 3, y);
  EXPECT_DOUBLE_EQ(y(0, 1, 1), 45.5);
  EXPECT_DOUBLE_EQ(y(0, 0, 0), 1 + 2 + 4 + 5 + 0.5);
  kernels::conv2d(x, w, b, 1, 3, y);
  EXPECT_DOUBLE_EQ(y(0, 0, 0), 12.5);
}

TEST(Conv, BilinearInInputAndKernel) {
  const Tensor x = random_tensor(3, 6, 5, 8);
  const auto w = random_vector(4 * 3 * 9, 9);
  Tensor x2 = x;
  for (double& v : x2.data) v *= 2.0;
  auto w2 = w;
  for (double& v : w2) v *= 0.5;
  Tensor y1, y2;
  kernels::conv2d(x, w, {}, 4, 3, y1);
  kernels::conv2d(x2, w2, {}, 4, 3, y2);
  EXPECT_LT(max_abs_diff(y1.data, y2.data), 1e-12);
}

TEST(Conv, ResultIsIndependentOfThreadCount) {
  const Tensor x = random_tensor(16, 61, 64, 10);
  const auto w = random_vector(16 * 16 * 9, 11);
  const Tensor gy = random_tensor(16, 61, 64, 12);
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    Tensor y, gx;
    std::vector<double> gw(w.size()), gb(16);
    kernels::conv2d(x, w, {}, 16, 3, y);
    kernels::conv2d_backward(x, gy, w, 3, &gx, gw, gb);
    return std::make_tuple(y.data, gx.data, gw, gb);
  };
  const int saved = omp_get_max_threads();
  const auto a = run(1);
  const auto b = run(4);
  omp_set_num_threads(saved);
  EXPECT_EQ(a, b);
}

TEST(Resize, MatchesReferenceAndIsAdjoint) {
  for (auto [h, w, oh, ow] : std::vector<std::array<int, 4>>{{8, 8, 12, 12}, {12, 12, 16, 16}, {5, 7, 11, 3}, {9, 9, 9, 9}}) {
    const Tensor x = random_tensor(3, h, w, 20);
    Tensor y, y_ref;
    kernels::resize_bilinear(x, oh, ow, y);
    reference::resize_bilinear(x, oh, ow, y_ref);
    EXPECT_LT(max_abs_diff(y.data, y_ref.data), 1e-14);

    const Tensor g = random_tensor(3, oh, ow, 21);
    Tensor gx(3, h, w), gx_ref(3, h, w);
    kernels::resize_bilinear_backward(g, gx);
    reference::resize_bilinear_backward(g, gx_ref);
    EXPECT_LT(max_abs_diff(gx.data, gx_ref.data), 1e-13);

    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) lhs += y.data[i] * g.data[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x.data[i] * gx.data[i];
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Resize, SameSizeIsIdentityAndConstantsArePreserved) {
  const Tensor x = random_tensor(2, 6, 6, 30);
  Tensor y;
  kernels::resize_bilinear(x, 6, 6, y);
  EXPECT_EQ(y.data, x.data);
  const Tensor c(1, 4, 5, 0.7);
  kernels::resize_bilinear(c, 9, 13, y);
  for (double v : y.data) EXPECT_NEAR(v, 0.7, 1e-15);
}

TEST(BatchNorm, StatsNormalizeAndBackwardMatchReference) {
  std::vector<Tensor> batch;
  for (int s = 0; s < 3; ++s) batch.push_back(random_tensor(5, 9, 7, 40 + s));
  const auto st = kernels::channel_stats(batch);
  const auto st_ref = reference::channel_stats(batch);
  EXPECT_LT(max_abs_diff(st.mean, st_ref.mean), 1e-14);
  EXPECT_LT(max_abs_diff(st.variance, st_ref.variance), 1e-13);
  EXPECT_EQ(st.count, 3u * 9 * 7);

  std::vector<Tensor> xhat = batch, xhat_ref = batch;
  for (auto& t : xhat) kernels::normalize(t, st.mean, st.variance, 1e-5);
  for (auto& t : xhat_ref) reference::normalize(t, st.mean, st.variance, 1e-5);
  for (int s = 0; s < 3; ++s) EXPECT_LT(max_abs_diff(xhat[s].data, xhat_ref[s].data), 1e-13);

  const auto gamma = random_vector(5, 50);
  std::vector<Tensor> g, g_ref;
  for (int s = 0; s < 3; ++s) g.push_back(random_tensor(5, 9, 7, 60 + s));
  g_ref = g;
  std::vector<double> gg(5), gb(5), gg_ref(5), gb_ref(5);
  kernels::batch_norm_backward(xhat, g, gamma, st.variance, 1e-5, gg, gb);
  reference::batch_norm_backward(xhat_ref, g_ref, gamma, st.variance, 1e-5, gg_ref, gb_ref);
  for (int s = 0; s < 3; ++s) EXPECT_LT(max_abs_diff(g[s].data, g_ref[s].data), 1e-12);
  EXPECT_LT(max_abs_diff(gg, gg_ref), 1e-11);
  EXPECT_LT(max_abs_diff(gb, gb_ref), 1e-11);
}

TEST(BatchNorm, BackwardMatchesFiniteDifferences) {
  // L = Σ c·(γ·x̂(x) + β) for a fixed random c; check dL/dx.
  std::vector<Tensor> x{random_tensor(2, 3, 4, 70), random_tensor(2, 3, 4, 71)};
  const std::vector<Tensor> c{random_tensor(2, 3, 4, 72), random_tensor(2, 3, 4, 73)};
  const std::vector<double> gamma{1.3, -0.7};
  const double eps = 1e-5;
  auto loss = [&](const std::vector<Tensor>& in) {
    auto st = reference::channel_stats(in);
    double l = 0.0;
    for (std::size_t s = 0; s < in.size(); ++s) {
      Tensor t = in[s];
      reference::normalize(t, st.mean, st.variance, eps);
      for (int ch = 0; ch < 2; ++ch)
        for (std::size_t i = 0; i < t.plane(); ++i) l += c[s].channel(ch)[i] * gamma[ch] * t.channel(ch)[i];
    }
    return l;
  };
  auto st = kernels::channel_stats(x);
  std::vector<Tensor> xhat = x;
  for (auto& t : xhat) kernels::normalize(t, st.mean, st.variance, eps);
  std::vector<Tensor> g = c;
  std::vector<double> gg(2), gb(2);
  kernels::batch_norm_backward(xhat, g, gamma, st.variance, eps, gg, gb);
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t i = 0; i < x[s].size(); ++i) {
      auto a = x, b = x;
      a[s].data[i] += 1e-5;
      b[s].data[i] -= 1e-5;
      const double fd = (loss(a) - loss(b)) / 2e-5;
      EXPECT_NEAR(g[s].data[i], fd, 1e-6 + 1e-4 * std::abs(fd));
    }
}

}  // namespace
}  // namespace phasenet

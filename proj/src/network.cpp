#include "phasenet/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "phasenet/kernels.hpp"

namespace phasenet {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Block input: [up(previous features), up(previous prediction), pyramid input].
Tensor make_block_input(const Tensor* features, const Tensor* prediction, const Tensor& pyramid) {
  const int h = pyramid.height;
  const int w = pyramid.width;
  const int f = features ? features->channels : 0;
  const int p = prediction ? prediction->channels : 0;
  Tensor x(f + p + pyramid.channels, h, w);
  const std::size_t hw = x.plane();
  Tensor scratch;
  if (features) {
    kernels::resize_bilinear(*features, h, w, scratch);
    std::copy(scratch.data.begin(), scratch.data.end(), x.data.begin());
  }
  if (prediction) {
    kernels::resize_bilinear(*prediction, h, w, scratch);
    std::copy(scratch.data.begin(), scratch.data.end(), x.data.begin() + f * hw);
  }
  std::copy(pyramid.data.begin(), pyramid.data.end(), x.data.begin() + (f + p) * hw);
  return x;
}

Tensor channel_slice(const Tensor& t, int first, int count) {
  Tensor out(count, t.height, t.width);
  std::copy(t.channel(first), t.channel(first) + count * t.plane(), out.data.begin());
  return out;
}

// y = leaky(γ·x̂ + β), in place on a copy of x̂.
Tensor affine_leaky(const Tensor& normalized, const std::vector<double>& scale, const std::vector<double>& offset,
                    double leak) {
  Tensor y = normalized;
  const std::size_t hw = y.plane();
  for (int c = 0; c < y.channels; ++c) {
    double* p = y.channel(c);
    for (std::size_t i = 0; i < hw; ++i) {
      const double z = scale[c] * p[i] + offset[c];
      p[i] = z > 0.0 ? z : leak * z;
    }
  }
  return y;
}

// Eval-mode normalization with running statistics followed by leaky
// rectification, in place.
void eval_norm_leaky(Tensor& x, const std::vector<double>& mean, const std::vector<double>& variance,
                     const std::vector<double>& scale, const std::vector<double>& offset, double eps, double leak) {
  const std::size_t hw = x.plane();
  for (int c = 0; c < x.channels; ++c) {
    const double a = scale[c] / std::sqrt(variance[c] + eps);
    const double b = offset[c] - a * mean[c];
    double* p = x.channel(c);
    for (std::size_t i = 0; i < hw; ++i) {
      const double z = a * p[i] + b;
      p[i] = z > 0.0 ? z : leak * z;
    }
  }
}

void tanh_inplace(Tensor& t) {
  for (double& v : t.data) v = std::tanh(v);
}

void update_running(std::vector<double>& running_mean, std::vector<double>& running_var,
                    const kernels::ChannelStats& stats, double momentum) {
  const double n = static_cast<double>(stats.count);
  const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
  for (std::size_t c = 0; c < running_mean.size(); ++c) {
    running_mean[c] = momentum * running_mean[c] + (1.0 - momentum) * stats.mean[c];
    running_var[c] = momentum * running_var[c] + (1.0 - momentum) * stats.variance[c] * unbias;
  }
}

// Turns dL/dy of y = leaky(γ·x̂ + β) into dL/d(γ·x̂ + β), in place.
void leaky_backward(Tensor& grad, const Tensor& normalized, const std::vector<double>& scale,
                    const std::vector<double>& offset, double leak) {
  const std::size_t hw = grad.plane();
  for (int c = 0; c < grad.channels; ++c) {
    double* g = grad.channel(c);
    const double* xh = normalized.channel(c);
    for (std::size_t i = 0; i < hw; ++i)
      if (scale[c] * xh[i] + offset[c] <= 0.0) g[i] *= leak;
  }
}

// Indices into GroupGradients::values, in BlockParams::trainable() order.
enum Slot { kConv1W, kConv1B, kNorm1Scale, kNorm1Offset, kConv2W, kConv2B, kNorm2Scale, kNorm2Offset, kHeadW, kHeadB };

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

}  // namespace

// ---------------------------------------------------------------------------

void NetworkConfig::validate() const {
  require(levels >= 1, "NetworkConfig: levels must be >= 1");
  require(orientations >= 1, "NetworkConfig: orientations must be >= 1");
  require(features >= 1, "NetworkConfig: features must be >= 1");
  require(leak >= 0.0 && std::isfinite(leak), "NetworkConfig: leak must be finite and >= 0");
  require(norm_momentum >= 0.0 && norm_momentum < 1.0, "NetworkConfig: momentum must be in [0, 1)");
  require(norm_epsilon > 0.0, "NetworkConfig: epsilon must be > 0");
}

int NetworkConfig::input_channels(int block) const {
  return block == 0 ? pyramid_channels(0) : features + prediction_channels(block - 1) + pyramid_channels(block);
}

int NetworkConfig::shared_from() const {
  const int first = std::max(base_blocks() - 3, 3);
  return std::min(first, base_blocks());
}

const std::array<const char*, BlockParams::kTrainable> BlockParams::trainable_names = {
    "conv1.weight", "conv1.bias", "norm1.scale", "norm1.offset", "conv2.weight",
    "conv2.bias",   "norm2.scale", "norm2.offset", "head.weight", "head.bias"};
const std::array<const char*, BlockParams::kBuffers> BlockParams::buffer_names = {
    "norm1.running_mean", "norm1.running_variance", "norm2.running_mean", "norm2.running_variance"};

BlockParams::BlockParams(int in, int f, int out, int k)
    : in_channels(in),
      features(f),
      out_channels(out),
      kernel(k),
      conv1_weight(static_cast<std::size_t>(f) * in * k * k),
      conv1_bias(f),
      norm1_scale(f, 1.0),
      norm1_offset(f),
      conv2_weight(static_cast<std::size_t>(f) * f * k * k),
      conv2_bias(f),
      norm2_scale(f, 1.0),
      norm2_offset(f),
      head_weight(static_cast<std::size_t>(out) * f),
      head_bias(out),
      norm1_mean(f),
      norm1_variance(f, 1.0),
      norm2_mean(f),
      norm2_variance(f, 1.0) {}

std::array<std::vector<double>*, BlockParams::kTrainable> BlockParams::trainable() {
  return {&conv1_weight, &conv1_bias, &norm1_scale, &norm1_offset, &conv2_weight,
          &conv2_bias,   &norm2_scale, &norm2_offset, &head_weight, &head_bias};
}

std::array<const std::vector<double>*, BlockParams::kTrainable> BlockParams::trainable() const {
  return {&conv1_weight, &conv1_bias, &norm1_scale, &norm1_offset, &conv2_weight,
          &conv2_bias,   &norm2_scale, &norm2_offset, &head_weight, &head_bias};
}

std::array<std::vector<double>*, BlockParams::kBuffers> BlockParams::buffers() {
  return {&norm1_mean, &norm1_variance, &norm2_mean, &norm2_variance};
}

std::array<const std::vector<double>*, BlockParams::kBuffers> BlockParams::buffers() const {
  return {&norm1_mean, &norm1_variance, &norm2_mean, &norm2_variance};
}

std::size_t BlockParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : trainable()) n += t->size();
  return n;
}

void NetworkGradients::zero() {
  for (auto& g : groups)
    for (auto& v : g.values) std::fill(v.begin(), v.end(), 0.0);
}

// ---------------------------------------------------------------------------

Network::Network(const NetworkConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const int shared = config_.shared_from();
  for (int b = 0; b < config_.base_blocks(); ++b) {
    if (b <= shared)
      groups_.emplace_back(config_.input_channels(b), config_.features, config_.prediction_channels(b),
                           config_.kernel_size(b));
    block_group_.push_back(std::min(b, shared));
  }

  std::mt19937_64 rng(seed);
  const double gain = 2.0 / (1.0 + config_.leak * config_.leak);
  auto fill = [&](std::vector<double>& w, int fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(gain / fan_in));
    for (double& v : w) v = dist(rng);
  };
  for (auto& g : groups_) {
    fill(g.conv1_weight, g.in_channels * g.kernel * g.kernel);
    fill(g.conv2_weight, g.features * g.kernel * g.kernel);
    fill(g.head_weight, g.features);
  }
}

Network Network::from_parts(const NetworkConfig& config, std::vector<BlockParams> groups, int blocks) {
  config.validate();
  Network reference(config, 0);
  require(groups.size() == reference.groups_.size(), "network: group count does not match configuration");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const BlockParams& want = reference.groups_[g];
    const BlockParams& got = groups[g];
    require(got.in_channels == want.in_channels && got.features == want.features &&
                got.out_channels == want.out_channels && got.kernel == want.kernel,
            "network: group " + std::to_string(g) + " shape does not match configuration");
    auto wt = want.trainable();
    auto gt = got.trainable();
    for (int i = 0; i < BlockParams::kTrainable; ++i)
      require(wt[i]->size() == gt[i]->size(), "network: tensor size mismatch in group " + std::to_string(g));
    auto wb = want.buffers();
    auto gb = got.buffers();
    for (int i = 0; i < BlockParams::kBuffers; ++i)
      require(wb[i]->size() == gb[i]->size(), "network: buffer size mismatch in group " + std::to_string(g));
  }
  reference.groups_ = std::move(groups);
  return blocks == reference.blocks() ? reference : reference.extended(blocks - 1);
}

bool Network::shared(int block) const {
  const int g = group_of(block);
  return std::count(block_group_.begin(), block_group_.end(), g) > 1;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.parameter_count();
  return n;
}

Network Network::extended(int levels) const {
  require(levels >= config_.levels, "extend_for_resolution: " + std::to_string(levels) +
                                        " levels is below the trained level count " + std::to_string(config_.levels));
  Network out = *this;
  if (levels + 1 <= blocks()) return out;
  require(config_.shared_from() < config_.base_blocks(),
          "extend_for_resolution: network has no shared group to reuse");
  const int shared_group = group_of(config_.shared_from());
  while (out.blocks() < levels + 1) out.block_group_.push_back(shared_group);
  return out;
}

NetworkGradients Network::zero_gradients() const {
  NetworkGradients grads;
  grads.groups.resize(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    auto t = groups_[g].trainable();
    for (int i = 0; i < BlockParams::kTrainable; ++i) grads.groups[g].values[i].assign(t[i]->size(), 0.0);
  }
  return grads;
}

void Network::check_input(const NetworkInput& input, int nb) const {
  require(nb >= 1 && nb <= blocks(), "network forward: " + std::to_string(nb) + " blocks requested, network has " +
                                         std::to_string(blocks()));
  require(static_cast<int>(input.levels.size()) >= nb,
          "network forward: input has " + std::to_string(input.levels.size()) + " levels, " + std::to_string(nb) +
              " required");
  for (int b = 0; b < nb; ++b) {
    const int want = config_.pyramid_channels(b);
    require(input.levels[b].channels == want, "network forward: block " + std::to_string(b) + " expects " +
                                                  std::to_string(want) + " input channels, got " +
                                                  input.levels[b].shape_string());
  }
}

RawPrediction Network::predict(const NetworkInput& input) const {
  const int nb = static_cast<int>(input.levels.size());
  require(nb <= blocks(), "network forward: input has " + std::to_string(nb) + " levels but the network has " +
                              std::to_string(blocks()) + " blocks");
  check_input(input, nb);
  RawPrediction out;
  Tensor features;
  for (int b = 0; b < nb; ++b) {
    const BlockParams& p = block(b);
    Tensor x = make_block_input(b ? &features : nullptr, b ? &out.levels.back() : nullptr, input.levels[b]);
    features = Tensor();
    Tensor a;
    kernels::conv2d(x, p.conv1_weight, p.conv1_bias, p.features, p.kernel, a);
    x = Tensor();
    eval_norm_leaky(a, p.norm1_mean, p.norm1_variance, p.norm1_scale, p.norm1_offset, config_.norm_epsilon,
                    config_.leak);
    kernels::conv2d(a, p.conv2_weight, p.conv2_bias, p.features, p.kernel, features);
    a = Tensor();
    eval_norm_leaky(features, p.norm2_mean, p.norm2_variance, p.norm2_scale, p.norm2_offset, config_.norm_epsilon,
                    config_.leak);
    Tensor head;
    kernels::conv2d(features, p.head_weight, p.head_bias, p.out_channels, 1, head);
    tanh_inplace(head);
    out.levels.push_back(std::move(head));
  }
  return out;
}

std::vector<RawPrediction> Network::forward(const std::vector<NetworkInput>& batch, Mode mode, int nb, TrainTape* tape,
                                            const std::vector<bool>& update_stats) {
  require(!batch.empty(), "network forward: empty batch");
  for (const auto& s : batch) check_input(s, nb);
  std::vector<RawPrediction> outputs(batch.size());

  if (mode == Mode::eval) {
    for (std::size_t s = 0; s < batch.size(); ++s) {
      NetworkInput head;
      head.levels.assign(batch[s].levels.begin(), batch[s].levels.begin() + nb);
      outputs[s] = predict(head);
    }
    return outputs;
  }

  TrainTape local;
  TrainTape& t = tape ? *tape : local;
  t.blocks.assign(nb, {});
  const std::size_t n = batch.size();
  const double eps = config_.norm_epsilon;

  for (int b = 0; b < nb; ++b) {
    const int g = group_of(b);
    BlockParams& p = groups_[g];
    const bool update = update_stats.empty() || update_stats.at(g);
    auto& tb = t.blocks[b];
    tb.input.resize(n);
    tb.norm1.resize(n);
    tb.norm2.resize(n);
    tb.act1.resize(n);
    tb.act2.resize(n);

    for (std::size_t s = 0; s < n; ++s) {
      tb.input[s] = make_block_input(b ? &t.blocks[b - 1].act2[s] : nullptr, b ? &outputs[s].levels.back() : nullptr,
                                     batch[s].levels[b]);
      kernels::conv2d(tb.input[s], p.conv1_weight, p.conv1_bias, p.features, p.kernel, tb.norm1[s]);
    }
    auto stats = kernels::channel_stats(tb.norm1);
    tb.variance1 = stats.variance;
    if (update) update_running(p.norm1_mean, p.norm1_variance, stats, config_.norm_momentum);
    for (std::size_t s = 0; s < n; ++s) {
      kernels::normalize(tb.norm1[s], stats.mean, stats.variance, eps);
      tb.act1[s] = affine_leaky(tb.norm1[s], p.norm1_scale, p.norm1_offset, config_.leak);
      kernels::conv2d(tb.act1[s], p.conv2_weight, p.conv2_bias, p.features, p.kernel, tb.norm2[s]);
    }
    stats = kernels::channel_stats(tb.norm2);
    tb.variance2 = stats.variance;
    if (update) update_running(p.norm2_mean, p.norm2_variance, stats, config_.norm_momentum);
    for (std::size_t s = 0; s < n; ++s) {
      kernels::normalize(tb.norm2[s], stats.mean, stats.variance, eps);
      tb.act2[s] = affine_leaky(tb.norm2[s], p.norm2_scale, p.norm2_offset, config_.leak);
      Tensor head;
      kernels::conv2d(tb.act2[s], p.head_weight, p.head_bias, p.out_channels, 1, head);
      tanh_inplace(head);
      outputs[s].levels.push_back(std::move(head));
    }
  }
  t.outputs = outputs;
  return outputs;
}

void Network::backward(const TrainTape& tape, const std::vector<RawPrediction>& grad_outputs, NetworkGradients& grads,
                       std::vector<NetworkInput>* grad_inputs) const {
  const int nb = static_cast<int>(tape.blocks.size());
  const std::size_t n = tape.outputs.size();
  require(grad_outputs.size() == n, "network backward: batch size mismatch");
  require(grads.groups.size() == groups_.size(), "network backward: gradient buffer mismatch");
  if (grad_inputs) {
    grad_inputs->assign(n, {});
    for (auto& gi : *grad_inputs) gi.levels.resize(nb);
  }
  const double eps = config_.norm_epsilon;

  std::vector<Tensor> grad_features(n);  // from the next block's input
  std::vector<Tensor> grad_pred(n);
  for (int b = nb - 1; b >= 0; --b) {
    const BlockParams& p = block(b);
    auto& gg = grads.groups[group_of(b)].values;
    const auto& tb = tape.blocks[b];

    std::vector<Tensor> d2(n);
    for (std::size_t s = 0; s < n; ++s) {
      const Tensor& out = tape.outputs[s].levels[b];
      Tensor dpre(out.channels, out.height, out.width);
      const auto& levels = grad_outputs[s].levels;
      if (static_cast<int>(levels.size()) > b && levels[b].size() > 0) {
        require(levels[b].same_shape(out), "network backward: output gradient shape mismatch");
        dpre.data = levels[b].data;
      }
      if (grad_pred[s].size() > 0) add_into(dpre, grad_pred[s]);
      for (std::size_t i = 0; i < dpre.size(); ++i) dpre.data[i] *= 1.0 - out.data[i] * out.data[i];
      kernels::conv2d_backward(tb.act2[s], dpre, p.head_weight, 1, &d2[s], gg[kHeadW], gg[kHeadB]);
      if (grad_features[s].size() > 0) add_into(d2[s], grad_features[s]);
      leaky_backward(d2[s], tb.norm2[s], p.norm2_scale, p.norm2_offset, config_.leak);
    }
    kernels::batch_norm_backward(tb.norm2, d2, p.norm2_scale, tb.variance2, eps, gg[kNorm2Scale], gg[kNorm2Offset]);

    std::vector<Tensor> d1(n);
    for (std::size_t s = 0; s < n; ++s) {
      kernels::conv2d_backward(tb.act1[s], d2[s], p.conv2_weight, p.kernel, &d1[s], gg[kConv2W], gg[kConv2B]);
      leaky_backward(d1[s], tb.norm1[s], p.norm1_scale, p.norm1_offset, config_.leak);
    }
    d2.clear();
    kernels::batch_norm_backward(tb.norm1, d1, p.norm1_scale, tb.variance1, eps, gg[kNorm1Scale], gg[kNorm1Offset]);

    for (std::size_t s = 0; s < n; ++s) {
      Tensor dx;
      kernels::conv2d_backward(tb.input[s], d1[s], p.conv1_weight, p.kernel, &dx, gg[kConv1W], gg[kConv1B]);
      const int pyr = config_.pyramid_channels(b);
      if (grad_inputs) (*grad_inputs)[s].levels[b] = channel_slice(dx, dx.channels - pyr, pyr);
      if (b == 0) continue;
      const Tensor& prev_features = tape.blocks[b - 1].act2[s];
      const Tensor& prev_pred = tape.outputs[s].levels[b - 1];
      grad_features[s] = Tensor(prev_features.channels, prev_features.height, prev_features.width);
      grad_pred[s] = Tensor(prev_pred.channels, prev_pred.height, prev_pred.width);
      kernels::resize_bilinear_backward(channel_slice(dx, 0, prev_features.channels), grad_features[s]);
      kernels::resize_bilinear_backward(channel_slice(dx, prev_features.channels, prev_pred.channels), grad_pred[s]);
    }
  }
}

}  // namespace phasenet

#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "phasenet/model.hpp"
#include "phasenet/synthetic.hpp"

namespace phasenet::testing {

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

// Which side of every non-smooth point the loss sits on: leaky-rectifier
// inputs, image residuals of the L1 term, and wrapped phase differences
// (whose sign flips both at 0 and across the ±π wrap).
std::vector<std::int8_t> kink_signature(Network& net, const std::vector<PreparedSample>& batch, int blocks,
                                        const FilterBank& bank, const std::vector<bool>& frozen) {
  std::vector<NetworkInput> inputs;
  for (const auto& s : batch) inputs.push_back(s.input);
  TrainTape tape;
  const auto raw = net.forward(inputs, Mode::train, blocks, &tape, frozen);
  std::vector<std::int8_t> out;
  for (const auto& b : tape.blocks)
    for (const auto* acts : {&b.act1, &b.act2})
      for (const Tensor& t : *acts)
        for (double v : t.data) out.push_back(static_cast<std::int8_t>(sign(v)));
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const PreparedSample& ps = batch[s];
    Decomposition pred = ps.target;
    for (int b = 0; b < blocks; ++b) remap_block(raw[s].levels[b], b, ps.first, ps.second, pred);
    const RealGrid image = hybrid_reconstruct(pred, ps.target, blocks, bank);
    for (std::size_t i = 0; i < image.size(); ++i) out.push_back(static_cast<std::int8_t>(sign(image[i] - ps.target_image[i])));
    for (int b = 1; b < blocks; ++b)
      for (int o = 0; o < ps.target.orientations(); ++o) {
        const RealGrid d = phase_diff(phase(ps.target.bands[b - 1][o]), predicted_phase(raw[s].levels[b], o));
        for (double v : d) out.push_back(static_cast<std::int8_t>(sign(v)));
      }
  }
  return out;
}

}  // namespace

GradCheckResult check_parameter_gradients(Network& net, const std::vector<PreparedSample>& batch, int blocks,
                                          const LossConfig& loss, const FilterBank& bank, int count,
                                          std::uint64_t seed, double step, double tolerance) {
  const std::vector<bool> frozen(net.groups(), false);
  NetworkGradients grads = net.zero_gradients();
  evaluate_batch(net, batch, blocks, loss, bank, &grads, frozen);
  auto value = [&] { return evaluate_batch(net, batch, blocks, loss, bank, nullptr, frozen).total; };
  const auto signature = kink_signature(net, batch, blocks, bank, frozen);

  // Only groups that take part in the first `blocks` blocks.
  std::vector<std::array<int, 3>> pool;  // group, tensor, index
  std::vector<bool> used(net.groups(), false);
  for (int b = 0; b < blocks; ++b) used[net.group_of(b)] = true;
  for (int g = 0; g < net.groups(); ++g) {
    if (!used[g]) continue;
    const auto t = net.group(g).trainable();
    for (int i = 0; i < BlockParams::kTrainable; ++i)
      for (std::size_t k = 0; k < t[i]->size(); ++k) pool.push_back({g, i, static_cast<int>(k)});
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);

  GradCheckResult r;
  for (const auto& [g, i, k] : pool) {
    if (r.checked >= count) break;
    double& p = (*net.group(g).trainable()[i])[k];
    const double saved = p;
    p = saved + step;
    const double up = value();
    const bool up_smooth = kink_signature(net, batch, blocks, bank, frozen) == signature;
    p = saved - step;
    const double down = value();
    const bool down_smooth = kink_signature(net, batch, blocks, bank, frozen) == signature;
    p = saved;
    if (!up_smooth || !down_smooth) {
      ++r.skipped_kinks;
      continue;
    }
    const double central = (up - down) / (2 * step);
    const double analytic = grads.groups[g].values[i][k];
    // Gradients that vanish exactly (conv biases ahead of normalization)
    // are compared against the rounding floor of the difference quotient.
    const double err = std::abs(analytic - central) / std::max({std::abs(analytic), std::abs(central), kGradientFloor});
    r.worst = std::max(r.worst, err);
    ++r.checked;
    if (err <= tolerance) ++r.passed;
  }
  return r;
}

ToyProblem make_toy_problem(std::uint64_t seed) {
  PyramidConfig pyramid;
  pyramid.levels = 4;
  ToyProblem toy{pyramid, FilterBank(pyramid, {24, 24}), {}};
  std::mt19937_64 rng(seed);
  for (int s = 0; s < 2; ++s) {
    const RealGrid tex = random_texture(24, 1.5, 0.02, rng);
    auto frame = [&](double dx) {
      RealGrid g = fourier_shift(tex, 0.3 * dx, dx);
      for (double& v : g) v = 0.5 + 0.15 * v;
      return g;
    };
    toy.batch.push_back(prepare_sample(frame(-1.5), frame(0.0), frame(1.5), toy.bank));
  }
  return toy;
}

}  // namespace phasenet::testing

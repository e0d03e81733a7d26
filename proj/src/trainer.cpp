#include "phasenet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "phasenet/checkpoint.hpp"
#include "phasenet/model.hpp"

namespace phasenet {
namespace {

int per_stage(const std::vector<int>& values, int stage, int stages, int fallback, const char* what) {
  if (values.empty()) return fallback;
  if (values.size() == 1) return values.front();
  if (static_cast<int>(values.size()) != stages)
    throw std::invalid_argument(std::string("train config: ") + what + " lists " + std::to_string(values.size()) +
                                " values for " + std::to_string(stages) + " stages");
  return values.at(stage);
}

std::vector<bool> trainable_groups(const Network& net, const Stage& stage, bool freeze) {
  std::vector<bool> on(net.groups(), false);
  if (freeze) {
    for (int g : stage.new_groups) on.at(g) = true;
  } else {
    for (int b = 0; b < stage.trained_blocks; ++b) on[net.group_of(b)] = true;
  }
  return on;
}

}  // namespace

void TrainConfig::validate() const {
  pyramid.validate();
  adam.validate();
  loss.validate();
  if (features < 1) throw std::invalid_argument("train config: features must be >= 1");
  if (patch < 2) throw std::invalid_argument("train config: patch must be >= 2");
  for (int b : batch_sizes)
    if (b < 1) throw std::invalid_argument("train config: batch sizes must be >= 1");
  for (int e : epochs)
    if (e < 0) throw std::invalid_argument("train config: epoch counts must be >= 0");
}

int TrainConfig::batch_size(int stage, int stages) const {
  const int fallback = stage == stages - 1 ? 12 : stage == stages - 2 ? 16 : 32;
  return per_stage(batch_sizes, stage, stages, fallback, "batch_sizes");
}

int TrainConfig::epoch_count(int stage, int stages) const {
  return per_stage(epochs, stage, stages, stage >= stages - 2 ? 6 : 12, "epochs");
}

TrainConfig desk_profile() {
  TrainConfig c;
  c.pyramid.levels = 6;
  c.patch = 64;
  c.batch_sizes = {16, 16, 16, 8, 8};
  c.epochs = {4, 4, 4, 3, 3};
  return c;
}

std::vector<Stage> plan_stages(const Network& net) {
  const int base = net.config().base_blocks();
  std::vector<Stage> stages;
  for (int b = 0; b < base; ++b) {
    const int g = net.group_of(b);
    if (stages.empty() || stages.back().new_groups.back() != g) {
      Stage s;
      s.index = static_cast<int>(stages.size());
      s.new_groups = {g};
      stages.push_back(s);
    }
    stages.back().trained_blocks = b + 1;
  }
  return stages;
}

PreparedSample prepare_sample(const RealGrid& first, const RealGrid& middle, const RealGrid& last,
                              const FilterBank& bank) {
  PreparedSample s;
  s.first = decompose(first, bank);
  s.second = decompose(last, bank);
  s.target = decompose(middle, bank);
  s.target_image = middle;
  s.input = normalize_inputs(s.first, s.second);
  return s;
}

std::vector<PreparedSample> prepare_batch(const std::vector<Triplet>& triplets, const FilterBank& bank) {
  std::vector<std::pair<std::size_t, int>> jobs;
  for (std::size_t t = 0; t < triplets.size(); ++t)
    for (int c = 0; c < triplets[t].middle.channels(); ++c) jobs.emplace_back(t, c);
  std::vector<PreparedSample> out(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto [t, c] = jobs[i];
    out[i] = prepare_sample(triplets[t].first.channel(c), triplets[t].middle.channel(c), triplets[t].last.channel(c),
                            bank);
  }
  return out;
}

Decomposition splice(const Decomposition& predicted, const Decomposition& ground_truth, int trained_blocks) {
  const int all = ground_truth.levels() + 1;
  if (trained_blocks < 0 || trained_blocks > all)
    throw std::invalid_argument("splice: " + std::to_string(trained_blocks) + " predicted blocks out of range [0, " +
                                std::to_string(all) + "]");
  if (predicted.levels() != ground_truth.levels() || predicted.orientations() != ground_truth.orientations())
    throw std::invalid_argument("splice: decomposition layouts differ");
  Decomposition out = ground_truth;
  if (trained_blocks >= 1) out.low_pass = predicted.low_pass;
  for (int j = 0; j + 1 < trained_blocks; ++j) out.bands[j] = predicted.bands[j];
  if (trained_blocks == all) std::fill(out.high_pass.begin(), out.high_pass.end(), 0.0);
  return out;
}

RealGrid hybrid_reconstruct(const Decomposition& predicted, const Decomposition& ground_truth, int trained_blocks,
                            const FilterBank& bank) {
  return reconstruct(splice(predicted, ground_truth, trained_blocks), bank);
}

BatchLoss evaluate_batch(Network& net, const std::vector<PreparedSample>& batch, int m, const LossConfig& loss,
                         const FilterBank& bank, NetworkGradients* grads, const std::vector<bool>& update_stats) {
  loss.validate();
  if (batch.empty()) throw std::invalid_argument("evaluate_batch: empty batch");
  if (m < 1 || m > net.config().base_blocks()) throw std::invalid_argument("evaluate_batch: bad stage block count");

  std::vector<NetworkInput> inputs;
  inputs.reserve(batch.size());
  for (const auto& s : batch) inputs.push_back(s.input);
  TrainTape tape;
  const std::vector<RawPrediction> raw = net.forward(inputs, Mode::train, m, &tape, update_stats);
  inputs.clear();

  const std::size_t n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double nu = loss.phase_weight;
  std::vector<double> image_terms(n), phase_terms(n);
  std::vector<RawPrediction> grad_raw(grads ? n : 0);

#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < n; ++s) {
    const PreparedSample& ps = batch[s];
    Decomposition pred = ps.target;
    for (int b = 0; b < m; ++b) remap_block(raw[s].levels[b], b, ps.first, ps.second, pred);
    const RealGrid image = hybrid_reconstruct(pred, ps.target, m, bank);
    image_terms[s] = image_l1(image, ps.target_image);

    std::vector<std::vector<RealGrid>> target_phase(m);
    double phase_term = 0.0;
    for (int b = 1; b < m; ++b)
      for (int o = 0; o < ps.target.orientations(); ++o) {
        target_phase[b].push_back(phase(ps.target.bands[b - 1][o]));
        phase_term += mean_abs_phase_diff(target_phase[b][o], predicted_phase(raw[s].levels[b], o));
      }
    phase_terms[s] = phase_term;
    if (!grads) continue;

    RealGrid g(image.extent());
    add_image_l1_gradient(image, ps.target_image, inv_n, g);
    const Decomposition adjoint = reconstruct_adjoint(g, bank);
    auto& levels = grad_raw[s].levels;
    levels.resize(m);
    for (int b = 0; b < m; ++b) {
      const Tensor& r = raw[s].levels[b];
      levels[b] = remap_block_backward(r, b, ps.first, ps.second, adjoint);
      if (b == 0) continue;
      for (int o = 0; o < ps.target.orientations(); ++o) {
        RealGrid gp(r.height, r.width);
        add_phase_gradient(target_phase[b][o], predicted_phase(r, o), nu * inv_n, gp);
        double* d = levels[b].channel(2 * o);
        for (std::size_t i = 0; i < gp.size(); ++i) d[i] += std::numbers::pi * gp[i];
      }
    }
  }

  if (grads) net.backward(tape, grad_raw, *grads);

  BatchLoss out;
  for (std::size_t s = 0; s < n; ++s) {
    out.image_term += image_terms[s];
    out.phase_term += phase_terms[s];
  }
  out.image_term *= inv_n;
  out.phase_term *= inv_n;
  out.total = out.image_term + nu * out.phase_term;
  return out;
}

TrainState TrainState::fresh(const TrainConfig& config) {
  config.validate();
  TrainState s;
  s.config = config;
  s.network = Network(network_config_for(config.pyramid, config.features), config.seed);
  s.optimizer = Adam(config.adam, s.network);
  std::seed_seq seq{config.seed, std::uint64_t{0x5eed}};
  s.rng.seed(seq);
  return s;
}

std::vector<EpochRecord> train_stage(TrainState& state, const Stage& stage, const TripletDataset& data,
                                     const FilterBank& bank, const EpochCallback& on_epoch) {
  if (data.empty()) throw std::invalid_argument("train_stage: empty dataset");
  const TrainConfig& cfg = state.config;
  const int stages = static_cast<int>(plan_stages(state.network).size());
  const int batch_size = cfg.batch_size(stage.index, stages);
  const int epochs = cfg.epoch_count(stage.index, stages);
  const std::vector<bool> trainable = trainable_groups(state.network, stage, cfg.freeze_trained);
  const PatchSampling sampling{cfg.patch, cfg.flip_horizontal, cfg.flip_vertical};

  std::vector<EpochRecord> records;
  std::vector<std::size_t> order(data.size());
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state.rng);

    EpochRecord rec;
    rec.stage = stage.index;
    rec.trained_blocks = stage.trained_blocks;
    rec.epoch = epoch;
    std::size_t seen = 0;
    for (std::size_t first = 0; first < order.size(); first += batch_size) {
      const std::size_t last = std::min(order.size(), first + batch_size);
      std::vector<Triplet> triplets;
      for (std::size_t i = first; i < last; ++i) triplets.push_back(sample_patch(data, order[i], sampling, state.rng));
      const std::vector<PreparedSample> batch = prepare_batch(triplets, bank);

      NetworkGradients grads = state.network.zero_gradients();
      const BatchLoss l = evaluate_batch(state.network, batch, stage.trained_blocks, cfg.loss, bank, &grads, trainable);
      state.optimizer.step(state.network, grads, trainable);

      const double w = static_cast<double>(batch.size());
      rec.image_term += l.image_term * w;
      rec.phase_term += l.phase_term * w;
      rec.total += l.total * w;
      seen += batch.size();
    }
    rec.image_term /= static_cast<double>(seen);
    rec.phase_term /= static_cast<double>(seen);
    rec.total /= static_cast<double>(seen);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return records;
}

std::vector<EpochRecord> train_full(TrainState& state, const TripletDataset& data, const TrainOptions& options) {
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const TrainConfig& cfg = state.config;
  cfg.validate();
  const FilterBank bank(cfg.pyramid, {cfg.patch, cfg.patch});
  const std::vector<Stage> stages = plan_stages(state.network);

  if (!options.checkpoint_dir.empty()) std::filesystem::create_directories(options.checkpoint_dir);
  std::ofstream log;
  if (!options.log_path.empty()) {
    const auto mode = state.stages_completed == 0 ? std::ios::trunc : std::ios::app;
    log.open(options.log_path, std::ios::out | mode);
    if (!log) throw std::runtime_error("cannot open training log " + options.log_path.string());
  }

  auto on_epoch = [&](const EpochRecord& r) {
    if (log.is_open()) {
      const nlohmann::json line = {{"stage", r.stage},           {"trained_blocks", r.trained_blocks},
                                   {"epoch", r.epoch},           {"image", r.image_term},
                                   {"phase", r.phase_term},      {"total", r.total},
                                   {"seconds", r.seconds}};
      log << line.dump() << '\n' << std::flush;
    }
    if (options.on_epoch) options.on_epoch(r);
  };

  std::vector<EpochRecord> records;
  while (state.stages_completed < static_cast<int>(stages.size())) {
    if (options.stop_after_stages >= 0 && state.stages_completed >= options.stop_after_stages) break;
    const Stage& stage = stages[state.stages_completed];
    const auto r = train_stage(state, stage, data, bank, on_epoch);
    records.insert(records.end(), r.begin(), r.end());
    ++state.stages_completed;
    if (!options.checkpoint_dir.empty()) {
      const Container c = checkpoint_container(state);
      c.save(options.checkpoint_dir / ("stage_" + std::to_string(stage.index) + ".ckpt"));
      c.save(options.checkpoint_dir / "latest.ckpt");
    }
  }
  return records;
}

}  // namespace phasenet

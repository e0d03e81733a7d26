#include "phasenet/checkpoint.hpp"

#include <sstream>
#include <stdexcept>
#include <string>

#include "phasenet/config.hpp"

namespace phasenet {
namespace {

std::vector<std::uint64_t> dims1(std::size_t n) { return {static_cast<std::uint64_t>(n)}; }

std::string group_key(int g, const char* name) { return "group." + std::to_string(g) + "." + name; }

std::string slot_key(int g, const char* name, const char* moment) {
  return "adam." + std::to_string(g) + "." + name + "." + moment;
}

// Copies an entry into `out`, checking its length.
void read_into(const Container& c, const std::string& name, std::vector<double>& out) {
  const auto& v = c.f64(name);
  if (v.size() != out.size())
    throw std::runtime_error("checkpoint: entry " + name + " has " + std::to_string(v.size()) + " values, expected " +
                             std::to_string(out.size()));
  out = v;
}

void put_grid(Container& c, const std::string& name, const RealGrid& g) {
  c.put(name, {static_cast<std::uint64_t>(g.rows()), static_cast<std::uint64_t>(g.cols())},
        std::vector<double>(g.begin(), g.end()));
}

RealGrid get_grid(const Container& c, const std::string& name) {
  const auto& e = c.at(name);
  if (e.type != Container::Type::f64 || e.dims.size() != 2) throw std::runtime_error("decomposition: bad entry " + name);
  RealGrid g(static_cast<int>(e.dims[0]), static_cast<int>(e.dims[1]));
  std::copy(e.f64.begin(), e.f64.end(), g.begin());
  return g;
}

}  // namespace

void put_network(Container& c, const Network& net) {
  const NetworkConfig& nc = net.config();
  c.put("network.shape", {4}, std::vector<std::int64_t>{nc.levels, nc.orientations, nc.features, net.blocks()});
  c.put("network.scalars", {3}, std::vector<double>{nc.leak, nc.norm_momentum, nc.norm_epsilon});
  for (int g = 0; g < net.groups(); ++g) {
    const BlockParams& p = net.group(g);
    c.put("group." + std::to_string(g) + ".shape", {4},
          std::vector<std::int64_t>{p.in_channels, p.features, p.out_channels, p.kernel});
    const auto t = p.trainable();
    for (int i = 0; i < BlockParams::kTrainable; ++i)
      c.put(group_key(g, BlockParams::trainable_names[i]), dims1(t[i]->size()), *t[i]);
    const auto b = p.buffers();
    for (int i = 0; i < BlockParams::kBuffers; ++i)
      c.put(group_key(g, BlockParams::buffer_names[i]), dims1(b[i]->size()), *b[i]);
  }
}

Network get_network(const Container& c) {
  const auto& shape = c.i64("network.shape");
  const auto& scalars = c.f64("network.scalars");
  if (shape.size() != 4 || scalars.size() != 3) throw std::runtime_error("checkpoint: malformed network header");
  NetworkConfig nc;
  nc.levels = static_cast<int>(shape[0]);
  nc.orientations = static_cast<int>(shape[1]);
  nc.features = static_cast<int>(shape[2]);
  nc.leak = scalars[0];
  nc.norm_momentum = scalars[1];
  nc.norm_epsilon = scalars[2];
  nc.validate();

  std::vector<BlockParams> groups;
  for (int g = 0; c.contains("group." + std::to_string(g) + ".shape"); ++g) {
    const auto& s = c.i64("group." + std::to_string(g) + ".shape");
    if (s.size() != 4) throw std::runtime_error("checkpoint: malformed shape of group " + std::to_string(g));
    BlockParams p(static_cast<int>(s[0]), static_cast<int>(s[1]), static_cast<int>(s[2]), static_cast<int>(s[3]));
    auto t = p.trainable();
    for (int i = 0; i < BlockParams::kTrainable; ++i) read_into(c, group_key(g, BlockParams::trainable_names[i]), *t[i]);
    auto b = p.buffers();
    for (int i = 0; i < BlockParams::kBuffers; ++i) read_into(c, group_key(g, BlockParams::buffer_names[i]), *b[i]);
    groups.push_back(std::move(p));
  }
  return Network::from_parts(nc, std::move(groups), static_cast<int>(shape[3]));
}

Container checkpoint_container(const TrainState& state) {
  Container c;
  put_network(c, state.network);

  const AdamConfig& ac = state.optimizer.config();
  c.put("adam.config", {4}, std::vector<double>{ac.learning_rate, ac.beta1, ac.beta2, ac.epsilon});
  const auto& slots = state.optimizer.slots();
  std::vector<std::int64_t> steps;
  for (std::size_t g = 0; g < slots.size(); ++g)
    for (int i = 0; i < BlockParams::kTrainable; ++i) {
      const AdamSlot& s = slots[g][i];
      const char* name = BlockParams::trainable_names[i];
      c.put(slot_key(static_cast<int>(g), name, "m"), dims1(s.m.size()), s.m);
      c.put(slot_key(static_cast<int>(g), name, "v"), dims1(s.v.size()), s.v);
      steps.push_back(s.step);
    }
  c.put("adam.steps", {slots.size(), static_cast<std::uint64_t>(BlockParams::kTrainable)}, std::move(steps));

  c.put("train.stages_completed", {1}, std::vector<std::int64_t>{state.stages_completed});
  std::ostringstream rng;
  rng << state.rng;
  c.put_text("train.rng", rng.str());
  c.put_text("train.config", train_config_text(state.config));
  return c;
}

TrainState restore_checkpoint(const Container& c) {
  TrainState s;
  s.config = parse_train_config(c.text("train.config"));
  s.network = get_network(c);

  const auto& ac = c.f64("adam.config");
  if (ac.size() != 4) throw std::runtime_error("checkpoint: malformed optimizer config");
  s.optimizer = Adam(AdamConfig{ac[0], ac[1], ac[2], ac[3]}, s.network);
  auto& slots = s.optimizer.slots();
  const auto& steps = c.i64("adam.steps");
  if (steps.size() != slots.size() * BlockParams::kTrainable)
    throw std::runtime_error("checkpoint: optimizer step table does not match the network");
  for (std::size_t g = 0; g < slots.size(); ++g)
    for (int i = 0; i < BlockParams::kTrainable; ++i) {
      AdamSlot& slot = slots[g][i];
      const char* name = BlockParams::trainable_names[i];
      read_into(c, slot_key(static_cast<int>(g), name, "m"), slot.m);
      read_into(c, slot_key(static_cast<int>(g), name, "v"), slot.v);
      slot.step = steps[g * BlockParams::kTrainable + i];
    }

  s.stages_completed = static_cast<int>(c.i64("train.stages_completed").at(0));
  std::istringstream rng(c.text("train.rng"));
  rng >> s.rng;
  if (!rng) throw std::runtime_error("checkpoint: malformed generator state");
  return s;
}

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  checkpoint_container(state).save(path);
}

TrainState load_checkpoint(const std::filesystem::path& path) { return restore_checkpoint(Container::load(path)); }

Network load_network(const std::filesystem::path& path) { return get_network(Container::load(path)); }

Container decomposition_container(const Decomposition& dec) {
  Container c;
  c.put("pyramid.shape", {2}, std::vector<std::int64_t>{dec.config.levels, dec.config.orientations});
  c.put("pyramid.scalars", {2}, std::vector<double>{dec.config.scale_factor, dec.config.transition_width});
  for (int j = 0; j < dec.levels(); ++j)
    for (int o = 0; o < dec.orientations(); ++o) {
      const ComplexGrid& z = dec.bands[j][o].values;
      std::vector<double> v;
      v.reserve(2 * z.size());
      for (const auto& x : z) {
        v.push_back(x.real());
        v.push_back(x.imag());
      }
      c.put("band." + std::to_string(j) + "." + std::to_string(o),
            {static_cast<std::uint64_t>(z.rows()), static_cast<std::uint64_t>(z.cols()), 2}, std::move(v));
    }
  put_grid(c, "low_pass", dec.low_pass);
  put_grid(c, "high_pass", dec.high_pass);
  return c;
}

Decomposition get_decomposition(const Container& c) {
  Decomposition d;
  const auto& shape = c.i64("pyramid.shape");
  const auto& scalars = c.f64("pyramid.scalars");
  if (shape.size() != 2 || scalars.size() != 2) throw std::runtime_error("decomposition: malformed header");
  d.config.levels = static_cast<int>(shape[0]);
  d.config.orientations = static_cast<int>(shape[1]);
  d.config.scale_factor = scalars[0];
  d.config.transition_width = scalars[1];
  d.config.validate();
  d.bands.resize(d.config.levels);
  for (int j = 0; j < d.config.levels; ++j)
    for (int o = 0; o < d.config.orientations; ++o) {
      const std::string name = "band." + std::to_string(j) + "." + std::to_string(o);
      const auto& e = c.at(name);
      if (e.type != Container::Type::f64 || e.dims.size() != 3 || e.dims[2] != 2)
        throw std::runtime_error("decomposition: bad entry " + name);
      ComplexGrid z(static_cast<int>(e.dims[0]), static_cast<int>(e.dims[1]));
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = {e.f64[2 * i], e.f64[2 * i + 1]};
      d.bands[j].push_back({std::move(z), j, o});
    }
  d.low_pass = get_grid(c, "low_pass");
  d.high_pass = get_grid(c, "high_pass");
  return d;
}

}  // namespace phasenet

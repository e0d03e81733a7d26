#pragma once

#include <filesystem>

#include "phasenet/container.hpp"
#include "phasenet/pyramid.hpp"
#include "phasenet/trainer.hpp"

namespace phasenet {

/// Network weights (config, group parameters, running statistics).
void put_network(Container& c, const Network& net);
Network get_network(const Container& c);

/// Everything needed to resume training bitwise: weights, optimizer moments
/// and step counts, completed stage count, generator state and config.
Container checkpoint_container(const TrainState& state);
TrainState restore_checkpoint(const Container& c);

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

/// Weights only, from a checkpoint file.
Network load_network(const std::filesystem::path& path);

/// Subbands as band.<level>.<orientation> arrays of shape [h, w, 2]
/// (real, imaginary), plus low_pass and high_pass and the pyramid settings.
Container decomposition_container(const Decomposition& dec);
Decomposition get_decomposition(const Container& c);

}  // namespace phasenet

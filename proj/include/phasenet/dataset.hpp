#pragma once

#include <array>
#include <filesystem>
#include <random>
#include <vector>

#include "phasenet/image.hpp"

namespace phasenet {

/// Frames (I1, I, I2): the target I is the temporal midpoint.
struct Triplet {
  Image first;
  Image middle;
  Image last;
};

/// Frames held once; triplets index consecutive frames of one sequence.
class TripletDataset {
 public:
  TripletDataset() = default;
  /// Each triplet becomes its own three-frame sequence.
  static TripletDataset from_triplets(std::vector<Triplet> triplets);
  /// Adds every consecutive triple of `frames` (≥ 3 frames, shared shape).
  void add_sequence(std::vector<Image> frames);

  std::size_t size() const { return triplets_.size(); }
  bool empty() const { return triplets_.empty(); }
  Triplet at(std::size_t i) const;
  const Image& frame(std::size_t triplet, int which) const;
  Extent extent(std::size_t i) const { return frames_[triplets_.at(i)[0]].extent(); }

 private:
  std::vector<Image> frames_;
  std::vector<std::array<std::size_t, 3>> triplets_;
};

/// Every subdirectory of `root` (and `root` itself) holding ≥ 3 PNG frames is
/// one sequence; frames are ordered by file name. Throws on unreadable files,
/// inconsistent shapes, or when no triplet is found.
TripletDataset load_triplets(const std::filesystem::path& root);

struct PatchSampling {
  int patch = 256;
  bool flip_horizontal = true;
  bool flip_vertical = true;
};

/// Crops one triplet with a shared random window and shared random flips.
Triplet sample_patch(const TripletDataset& data, std::size_t index, const PatchSampling& sampling,
                     std::mt19937_64& rng);

/// `batch_size` triplets drawn uniformly with replacement, each cropped by
/// sample_patch.
std::vector<Triplet> sample_batch(const TripletDataset& data, const PatchSampling& sampling, int batch_size,
                                  std::mt19937_64& rng);

}  // namespace phasenet

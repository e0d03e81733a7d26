#include "phasenet/dataset.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "phasenet/image_io.hpp"

namespace phasenet {
namespace {

bool is_png(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

std::vector<std::filesystem::path> frames_in(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && is_png(entry.path())) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

Image crop_flip(const Image& src, int y0, int x0, int size, bool flip_h, bool flip_v) {
  Image out(size, size, src.channels());
  for (int c = 0; c < src.channels(); ++c)
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const int sy = y0 + (flip_v ? size - 1 - y : y);
        const int sx = x0 + (flip_h ? size - 1 - x : x);
        out(y, x, c) = src(sy, sx, c);
      }
  return out;
}

}  // namespace

TripletDataset TripletDataset::from_triplets(std::vector<Triplet> triplets) {
  TripletDataset d;
  for (auto& t : triplets) d.add_sequence({std::move(t.first), std::move(t.middle), std::move(t.last)});
  return d;
}

void TripletDataset::add_sequence(std::vector<Image> frames) {
  if (frames.size() < 3) throw std::invalid_argument("dataset: a sequence needs at least 3 frames");
  for (const auto& f : frames) require_same_shape(frames.front(), f, "dataset sequence");
  const std::size_t base = frames_.size();
  for (auto& f : frames) frames_.push_back(std::move(f));
  for (std::size_t i = 0; i + 2 < frames.size(); ++i) triplets_.push_back({base + i, base + i + 1, base + i + 2});
}

Triplet TripletDataset::at(std::size_t i) const {
  const auto& t = triplets_.at(i);
  return {frames_[t[0]], frames_[t[1]], frames_[t[2]]};
}

const Image& TripletDataset::frame(std::size_t triplet, int which) const {
  return frames_[triplets_.at(triplet).at(which)];
}

TripletDataset load_triplets(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw std::runtime_error("dataset: not a directory: " + root.string());
  std::vector<std::filesystem::path> dirs{root};
  std::vector<std::filesystem::path> subdirs;
  for (const auto& entry : std::filesystem::directory_iterator(root))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  dirs.insert(dirs.end(), subdirs.begin(), subdirs.end());

  TripletDataset data;
  for (const auto& dir : dirs) {
    const auto paths = frames_in(dir);
    if (paths.size() < 3) continue;
    std::vector<Image> frames;
    for (const auto& p : paths) frames.push_back(read_png(p));
    for (const auto& f : frames)
      if (!(f.extent() == frames.front().extent()) || f.channels() != frames.front().channels())
        throw std::runtime_error("dataset: inconsistent frame shapes in " + dir.string());
    data.add_sequence(std::move(frames));
  }
  if (data.empty()) throw std::runtime_error("dataset: no frame triplets found under " + root.string());
  return data;
}

Triplet sample_patch(const TripletDataset& data, std::size_t index, const PatchSampling& sampling,
                     std::mt19937_64& rng) {
  const Extent e = data.extent(index);
  if (sampling.patch < 1 || e.height < sampling.patch || e.width < sampling.patch)
    throw std::invalid_argument("sample_patch: frames " + to_string(e) + " smaller than patch " +
                                std::to_string(sampling.patch));
  std::uniform_int_distribution<int> ys(0, e.height - sampling.patch);
  std::uniform_int_distribution<int> xs(0, e.width - sampling.patch);
  std::bernoulli_distribution coin(0.5);
  const int y0 = ys(rng);
  const int x0 = xs(rng);
  const bool fh = coin(rng) && sampling.flip_horizontal;
  const bool fv = coin(rng) && sampling.flip_vertical;
  return {crop_flip(data.frame(index, 0), y0, x0, sampling.patch, fh, fv),
          crop_flip(data.frame(index, 1), y0, x0, sampling.patch, fh, fv),
          crop_flip(data.frame(index, 2), y0, x0, sampling.patch, fh, fv)};
}

std::vector<Triplet> sample_batch(const TripletDataset& data, const PatchSampling& sampling, int batch_size,
                                  std::mt19937_64& rng) {
  if (data.empty()) throw std::invalid_argument("sample_batch: empty dataset");
  if (batch_size < 1) throw std::invalid_argument("sample_batch: batch size must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::vector<Triplet> out;
  for (int i = 0; i < batch_size; ++i) out.push_back(sample_patch(data, pick(rng), sampling, rng));
  return out;
}

}  // namespace phasenet

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "phasenet/image.hpp"
#include "phasenet/network.hpp"
#include "phasenet/padding.hpp"
#include "phasenet/pyramid.hpp"

namespace phasenet {

enum class Method { phasenet, baseline, average };

Method parse_method(const std::string& name);
const char* method_name(Method m);

/// Interpolates frame pairs of any size: mirror-pads onto the smallest
/// supported canvas, runs the method and crops back. A network trained on
/// fewer levels than `pyramid.levels` is extended by reusing its shared
/// top-level weights.
class FrameInterpolator {
 public:
  FrameInterpolator(Method method, const PyramidConfig& pyramid, std::optional<Network> network = std::nullopt);

  Method method() const { return method_; }
  const PyramidConfig& pyramid() const { return pyramid_; }
  /// The network as run (after extension); null for training-free methods.
  const Network* network() const { return network_ ? &*network_ : nullptr; }

  Extent canvas_for(Extent image) const;
  Image operator()(const Image& first, const Image& second) const;

 private:
  const FilterBank& bank_for(Extent canvas) const;

  Method method_;
  PyramidConfig pyramid_;
  std::optional<Network> network_;
  mutable std::map<std::pair<int, int>, std::unique_ptr<FilterBank>> banks_;
};

}  // namespace phasenet

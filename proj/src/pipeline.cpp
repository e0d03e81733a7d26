#include "phasenet/pipeline.hpp"

#include <stdexcept>

#include "phasenet/baseline.hpp"
#include "phasenet/model.hpp"

namespace phasenet {

Method parse_method(const std::string& name) {
  if (name == "phasenet") return Method::phasenet;
  if (name == "baseline") return Method::baseline;
  if (name == "average") return Method::average;
  throw std::invalid_argument("unknown method '" + name + "' (expected phasenet, baseline or average)");
}

const char* method_name(Method m) {
  switch (m) {
    case Method::phasenet: return "phasenet";
    case Method::baseline: return "baseline";
    case Method::average: return "average";
  }
  return "?";
}

FrameInterpolator::FrameInterpolator(Method method, const PyramidConfig& pyramid, std::optional<Network> network)
    : method_(method), pyramid_(pyramid) {
  pyramid_.validate();
  if (method_ != Method::phasenet) return;
  if (!network) throw std::invalid_argument("method phasenet requires a checkpoint");
  const NetworkConfig& nc = network->config();
  if (nc.orientations != pyramid_.orientations)
    throw std::invalid_argument("checkpoint was trained with " + std::to_string(nc.orientations) +
                                " orientations, pyramid has " + std::to_string(pyramid_.orientations));
  network_ = network->extended(pyramid_.levels);
}

Extent FrameInterpolator::canvas_for(Extent image) const {
  if (method_ == Method::average) return image;
  return padded_canvas(image, pyramid_);
}

const FilterBank& FrameInterpolator::bank_for(Extent canvas) const {
  auto& slot = banks_[{canvas.height, canvas.width}];
  if (!slot) slot = std::make_unique<FilterBank>(pyramid_, canvas);
  return *slot;
}

Image FrameInterpolator::operator()(const Image& first, const Image& second) const {
  require_same_shape(first, second, "interpolate");
  if (method_ == Method::average) return average_interpolate(first, second);
  const Padding pad = plan_padding(first.extent(), canvas_for(first.extent()));
  const Image a = mirror_pad(first, pad);
  const Image b = mirror_pad(second, pad);
  const FilterBank& bank = bank_for(a.extent());
  const Image out = method_ == Method::phasenet ? interpolate(a, b, *network_, bank)
                                                : naive_phase_interpolate(a, b, bank);
  return crop(out, pad);
}

}  // namespace phasenet

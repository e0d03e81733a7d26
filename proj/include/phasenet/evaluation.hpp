#pragma once

#include <functional>
#include <string>
#include <vector>

#include "phasenet/image.hpp"
#include "phasenet/metrics.hpp"

namespace phasenet {

/// Synthesizes the frame between `previous` and `next`. `index` is the
/// position of the held-out frame in the sequence.
using Interpolator = std::function<Image(const Image& previous, const Image& next, std::size_t index)>;

struct FrameScore {
  std::size_t index = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::string method;
  std::string sequence;
  std::vector<FrameScore> frames;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

/// Scores every interior frame k against the interpolation of frames k-1 and
/// k+1. Synthesized frames are clamped to [0, 1] before scoring.
MetricReport leave_one_out(const std::vector<Image>& frames, const Interpolator& method, const std::string& label,
                           const std::string& sequence = {}, double psnr_cap = kDefaultPsnrCap);

/// Fixed-width text table: one row per report with frame count and means.
std::string format_table(const std::vector<MetricReport>& reports);

/// One JSON object per line: a record per frame, then a summary record.
std::string format_records(const MetricReport& report);

}  // namespace phasenet

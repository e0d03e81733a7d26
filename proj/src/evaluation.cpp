#include "phasenet/evaluation.hpp"

#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace phasenet {

MetricReport leave_one_out(const std::vector<Image>& frames, const Interpolator& method, const std::string& label,
                           const std::string& sequence, double psnr_cap) {
  if (frames.size() < 3)
    throw std::invalid_argument("leave_one_out: need at least 3 frames, got " + std::to_string(frames.size()));
  if (!method) throw std::invalid_argument("leave_one_out: no interpolator");
  MetricReport r;
  r.method = label;
  r.sequence = sequence;
  for (std::size_t k = 1; k + 1 < frames.size(); ++k) {
    const Image out = method(frames[k - 1], frames[k + 1], k).clamped();
    r.frames.push_back({k, psnr(out, frames[k], psnr_cap), ssim(out, frames[k])});
  }
  for (const auto& f : r.frames) {
    r.mean_psnr += f.psnr;
    r.mean_ssim += f.ssim;
  }
  r.mean_psnr /= static_cast<double>(r.frames.size());
  r.mean_ssim /= static_cast<double>(r.frames.size());
  return r;
}

std::string format_table(const std::vector<MetricReport>& reports) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %-20s %7s %10s %8s\n", "method", "sequence", "frames", "psnr_db", "ssim");
  out += line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-16s %-20s %7zu %10.4f %8.5f\n", r.method.c_str(),
                  r.sequence.empty() ? "-" : r.sequence.c_str(), r.frames.size(), r.mean_psnr, r.mean_ssim);
    out += line;
  }
  return out;
}

std::string format_records(const MetricReport& report) {
  std::string out;
  for (const auto& f : report.frames) {
    const nlohmann::json j = {{"method", report.method}, {"sequence", report.sequence}, {"frame", f.index},
                              {"psnr", f.psnr},          {"ssim", f.ssim}};
    out += j.dump() + "\n";
  }
  const nlohmann::json s = {{"method", report.method},       {"sequence", report.sequence},
                            {"frames", report.frames.size()}, {"mean_psnr", report.mean_psnr},
                            {"mean_ssim", report.mean_ssim}};
  out += s.dump() + "\n";
  return out;
}

}  // namespace phasenet

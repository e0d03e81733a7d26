// Command-line front end: decompose, interpolate, train, eval, info, synth.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "phasenet/checkpoint.hpp"
#include "phasenet/config.hpp"
#include "phasenet/evaluation.hpp"
#include "phasenet/image_io.hpp"
#include "phasenet/model.hpp"
#include "phasenet/pipeline.hpp"
#include "phasenet/synthetic.hpp"

namespace fs = std::filesystem;
using namespace phasenet;

namespace {

struct SharedFlags {
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> levels;
  std::optional<int> orientations;
  std::optional<double> scale_factor;
  std::optional<int> threads;
  std::optional<std::string> profile;
  std::optional<double> psnr_cap;
  bool deterministic = false;
  std::string output;
};

void add_shared(CLI::App* cmd, SharedFlags& f) {
  cmd->add_option("--config", f.config_file, "key = value settings file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--levels", f.levels, "oriented pyramid levels");
  cmd->add_option("--orientations", f.orientations, "orientations per level");
  cmd->add_option("--scale-factor", f.scale_factor, "ratio between adjacent level resolutions");
  cmd->add_option("--threads", f.threads, "worker threads (0: default)");
  cmd->add_flag("--deterministic", f.deterministic, "single-threaded execution");
  cmd->add_option("--output,-o", f.output, "output file or directory");
}

// Defaults, then the config file, then flags. Records which pyramid keys were
// given explicitly so checkpoint settings can fill the rest.
struct Resolved {
  RunConfig run;
  bool levels_set = false;
};

Resolved resolve(const SharedFlags& f, const std::string& default_profile = "full") {
  Resolved r;
  r.run.set("profile", f.profile.value_or(default_profile));
  if (!f.config_file.empty()) {
    r.run.merge_file(f.config_file);
    r.levels_set = r.run.assigned("levels");
  }
  if (f.seed) r.run.train.seed = *f.seed;
  if (f.levels) {
    r.run.train.pyramid.levels = *f.levels;
    r.levels_set = true;
  }
  if (f.orientations) r.run.train.pyramid.orientations = *f.orientations;
  if (f.scale_factor) r.run.train.pyramid.scale_factor = *f.scale_factor;
  if (f.threads) r.run.threads = *f.threads;
  if (f.psnr_cap) r.run.psnr_cap = *f.psnr_cap;
  if (f.deterministic) r.run.deterministic = true;
  if (!f.output.empty()) r.run.output = f.output;
  r.run.validate();
  if (r.run.deterministic) omp_set_num_threads(1);
  else if (r.run.threads > 0) omp_set_num_threads(r.run.threads);
  return r;
}

fs::path require_output(const RunConfig& run, const char* what) {
  if (run.output.empty()) throw std::invalid_argument(std::string(what) + " requires --output");
  return run.output;
}

Image to_unit_range(const RealGrid& g, double lo, double hi) {
  RealGrid out(g.extent());
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = (g[i] - lo) / span;
  return Image(std::move(out));
}

Image symmetric_view(const RealGrid& g) {
  double peak = 0.0;
  for (double v : g) peak = std::max(peak, std::abs(v));
  return to_unit_range(g, -peak, peak);
}

// Interior of a sequence directory: sorted PNG frames.
std::vector<Image> read_frames(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<Image> frames;
  for (const auto& f : files) frames.push_back(read_png(f));
  return frames;
}

// Network and pyramid for a method; the checkpoint supplies the pyramid
// settings unless they were set explicitly.
FrameInterpolator make_interpolator(Method method, const Resolved& r, const std::string& checkpoint) {
  PyramidConfig pyramid = r.run.train.pyramid;
  std::optional<Network> net;
  if (method == Method::phasenet) {
    if (checkpoint.empty()) throw std::invalid_argument("method phasenet requires --checkpoint");
    const TrainState state = load_checkpoint(checkpoint);
    const PyramidConfig trained = state.config.pyramid;
    const int levels = r.levels_set ? pyramid.levels : trained.levels;
    pyramid = trained;
    pyramid.levels = levels;
    net = state.network;
  }
  return FrameInterpolator(method, pyramid, std::move(net));
}

int cmd_decompose(const std::string& input, const SharedFlags& flags) {
  const Resolved r = resolve(flags);
  const fs::path out = require_output(r.run, "decompose");
  const Image img = read_png(input);
  const FilterBank bank(r.run.train.pyramid, img.extent());
  const Decomposition dec = decompose(img.luma(), bank);

  fs::create_directories(out);
  decomposition_container(dec).save(out / "decomposition.phnc");
  for (int j = 0; j < dec.levels(); ++j)
    for (int o = 0; o < dec.orientations(); ++o) {
      const std::string stem = "level_" + std::to_string(j) + "_orientation_" + std::to_string(o);
      const RealGrid a = amplitude(dec.bands[j][o]);
      write_png(out / (stem + "_amplitude.png"), to_unit_range(a, 0.0, *std::max_element(a.begin(), a.end())));
      write_png(out / (stem + "_phase.png"), to_unit_range(phase(dec.bands[j][o]), -std::numbers::pi, std::numbers::pi));
    }
  write_png(out / "low_pass.png", Image(dec.low_pass).clamped());
  write_png(out / "high_pass.png", symmetric_view(dec.high_pass));

  std::printf("decomposed %s (%s): %d levels x %d orientations\n", input.c_str(), to_string(img.extent()).c_str(),
              dec.levels(), dec.orientations());
  for (int j = 0; j < dec.levels(); ++j)
    std::printf("  level %d: %s\n", j, to_string(bank.band_extent(j)).c_str());
  std::printf("  low-pass: %s\n", to_string(bank.low_pass_extent()).c_str());
  return 0;
}

int cmd_interpolate(const std::string& a, const std::string& b, const std::string& method_name_,
                    const std::string& checkpoint, int bit_depth, const SharedFlags& flags) {
  const Resolved r = resolve(flags);
  const fs::path out = require_output(r.run, "interpolate");
  const Method method = parse_method(method_name_);
  const Image first = read_png(a);
  const Image second = read_png(b);
  require_same_shape(first, second, "interpolate");
  const FrameInterpolator interp = make_interpolator(method, r, checkpoint);
  const Image result = interp(first, second);
  write_png(out, result, bit_depth);
  std::printf("%s: %s canvas %s, %d levels -> %s\n", method_name(method), to_string(first.extent()).c_str(),
              to_string(interp.canvas_for(first.extent())).c_str(), interp.pyramid().levels, out.c_str());
  return 0;
}

int cmd_train(const std::string& dataset, const std::string& resume, const SharedFlags& flags) {
  const Resolved r = resolve(flags, "desk");
  const fs::path out = require_output(r.run, "train");
  const TripletDataset data = load_triplets(dataset);  // before any file is written

  TrainState state = resume.empty() ? TrainState::fresh(r.run.train) : load_checkpoint(resume);
  if (!resume.empty() && !(state.config == r.run.train))
    std::fprintf(stderr, "note: resuming with the settings stored in %s\n", resume.c_str());
  std::printf("training on %zu triplets, %zu parameters, %zu stages\n", data.size(),
              state.network.parameter_count(), plan_stages(state.network).size());

  fs::create_directories(out);
  TrainOptions options;
  options.checkpoint_dir = out;
  options.log_path = out / "train_log.jsonl";
  options.on_epoch = [](const EpochRecord& e) {
    std::printf("stage %d (blocks %d) epoch %d: total %.6f image %.6f phase %.5f [%.1fs]\n", e.stage,
                e.trained_blocks, e.epoch, e.total, e.image_term, e.phase_term, e.seconds);
    std::fflush(stdout);
  };
  train_full(state, data, options);
  std::printf("wrote %s\n", (out / "latest.ckpt").c_str());
  return 0;
}

int cmd_eval(const std::string& root, const std::vector<std::string>& methods, const std::string& checkpoint,
             const SharedFlags& flags) {
  const Resolved r = resolve(flags);
  const fs::path out = require_output(r.run, "eval");

  std::vector<std::pair<std::string, std::vector<Image>>> sequences;
  if (!read_frames(root).empty()) sequences.emplace_back(fs::path(root).filename().string(), read_frames(root));
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto frames = read_frames(d);
    if (frames.size() >= 3) sequences.emplace_back(d.filename().string(), std::move(frames));
  }
  if (sequences.empty()) throw std::invalid_argument("eval: no sequence with at least 3 frames under " + root);

  std::vector<MetricReport> reports;
  for (const auto& name : methods) {
    Interpolator fn;
    std::shared_ptr<FrameInterpolator> interp;
    const std::vector<Image>* current = nullptr;
    if (name == "passthrough") {
      fn = [&current](const Image&, const Image&, std::size_t k) { return (*current)[k]; };
    } else {
      interp = std::make_shared<FrameInterpolator>(make_interpolator(parse_method(name), r, checkpoint));
      fn = [interp](const Image& a, const Image& b, std::size_t) { return (*interp)(a, b); };
    }
    for (const auto& [seq, frames] : sequences) {
      current = &frames;
      reports.push_back(leave_one_out(frames, fn, name, seq, r.run.psnr_cap));
    }
  }

  const std::string table = format_table(reports);
  std::string records;
  for (const auto& rep : reports) records += format_records(rep);
  fs::create_directories(out);
  write_file_atomic(out / "report.txt", std::vector<std::uint8_t>(table.begin(), table.end()));
  write_file_atomic(out / "report.jsonl", std::vector<std::uint8_t>(records.begin(), records.end()));
  std::fputs(table.c_str(), stdout);
  return 0;
}

int cmd_info(const std::string& checkpoint, const SharedFlags& flags) {
  const Resolved r = resolve(flags);
  PyramidConfig pyramid = r.run.train.pyramid;
  Network net;
  if (!checkpoint.empty()) {
    const TrainState state = load_checkpoint(checkpoint);
    std::printf("checkpoint %s: %d stages completed\n", checkpoint.c_str(), state.stages_completed);
    net = state.network;
    pyramid = state.config.pyramid;
    if (r.levels_set) {
      pyramid.levels = r.run.train.pyramid.levels;
      net = net.extended(pyramid.levels);
    }
  } else {
    net = Network(network_config_for(pyramid, r.run.train.features), r.run.train.seed);
  }
  const int side = r.run.train.patch;
  const auto schedule = resolution_schedule(pyramid, {side, side});
  std::printf("%-6s %-11s %-6s %-6s %-6s %-6s %-5s\n", "block", "res", "in", "feat", "pred", "kernel", "group");
  for (int b = 0; b < net.blocks(); ++b) {
    const BlockParams& p = net.block(b);
    const Extent e = b < static_cast<int>(schedule.size()) ? schedule[b] : Extent{};
    std::printf("%-6d %-11s %-6d %-6d %-6d %dx%-4d %d%s\n", b, to_string(e).c_str(), p.in_channels, p.features,
                p.out_channels, p.kernel, p.kernel, net.group_of(b), net.shared(b) ? " shared" : "");
  }
  std::printf("trainable parameters: %zu\n", net.parameter_count());
  std::printf("stages: %zu\n", plan_stages(net).size());
  std::printf("\n%s", r.run.to_text().c_str());
  return 0;
}

int cmd_synth(const SyntheticConfig& sc, const SharedFlags& flags) {
  const Resolved r = resolve(flags);
  const fs::path out = require_output(r.run, "synth");
  SyntheticConfig c = sc;
  c.seed = r.run.train.seed;
  const TripletDataset data = synthetic_dataset(c);
  for (std::size_t i = 0; i < data.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "seq_%05zu", i);
    const fs::path dir = out / name;
    fs::create_directories(dir);
    const Triplet t = data.at(i);
    write_png(dir / "frame_0.png", t.first, 16);
    write_png(dir / "frame_1.png", t.middle, 16);
    write_png(dir / "frame_2.png", t.last, 16);
  }
  std::printf("wrote %zu triplets to %s\n", data.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-based frame interpolation toolkit"};
  app.require_subcommand(1);
  SharedFlags flags;

  auto* decompose_cmd = app.add_subcommand("decompose", "Write subbands and residuals of an image");
  std::string image;
  decompose_cmd->add_option("image", image, "input PNG")->required();
  add_shared(decompose_cmd, flags);

  auto* interp_cmd = app.add_subcommand("interpolate", "Synthesize the frame between two frames");
  std::string frame1, frame2, method = "phasenet", checkpoint;
  int bit_depth = 8;
  interp_cmd->add_option("first", frame1, "first frame")->required();
  interp_cmd->add_option("second", frame2, "second frame")->required();
  interp_cmd->add_option("--method", method, "phasenet, baseline or average");
  interp_cmd->add_option("--checkpoint", checkpoint, "trained weights");
  interp_cmd->add_option("--bit-depth", bit_depth, "8 or 16")->check(CLI::IsMember({8, 16}));
  add_shared(interp_cmd, flags);

  auto* train_cmd = app.add_subcommand("train", "Hierarchical training on a triplet directory");
  std::string dataset, resume;
  train_cmd->add_option("dataset", dataset, "directory of frame sequences")->required();
  train_cmd->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);
  train_cmd->add_option("--profile", flags.profile, "desk (default) or full");
  add_shared(train_cmd, flags);

  auto* eval_cmd = app.add_subcommand("eval", "Leave-one-out evaluation of frame sequences");
  std::string sequences;
  std::vector<std::string> methods;
  eval_cmd->add_option("sequences", sequences, "sequence directory or directory of sequences")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--method", methods, "phasenet, baseline, average or passthrough (repeatable)")->required();
  eval_cmd->add_option("--checkpoint", checkpoint, "trained weights");
  eval_cmd->add_option("--psnr-cap", flags.psnr_cap, "PSNR reported for identical frames");
  add_shared(eval_cmd, flags);

  auto* info_cmd = app.add_subcommand("info", "Print the architecture, schedule and settings");
  info_cmd->add_option("--checkpoint", checkpoint, "trained weights");
  add_shared(info_cmd, flags);

  auto* synth_cmd = app.add_subcommand("synth", "Generate translating-texture triplets");
  SyntheticConfig sc;
  synth_cmd->add_option("--count", sc.count, "number of triplets");
  synth_cmd->add_option("--size", sc.size, "frame side in pixels");
  synth_cmd->add_option("--min-shift", sc.min_shift, "smallest total shift in pixels");
  synth_cmd->add_option("--max-shift", sc.max_shift, "largest total shift in pixels");
  add_shared(synth_cmd, flags);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*decompose_cmd) return cmd_decompose(image, flags);
    if (*interp_cmd) return cmd_interpolate(frame1, frame2, method, checkpoint, bit_depth, flags);
    if (*train_cmd) return cmd_train(dataset, resume, flags);
    if (*eval_cmd) return cmd_eval(sequences, methods, checkpoint, flags);
    if (*info_cmd) return cmd_info(checkpoint, flags);
    if (*synth_cmd) return cmd_synth(sc, flags);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

#pragma once

#include <filesystem>
#include <set>
#include <string>

#include "phasenet/trainer.hpp"

namespace phasenet {

/// Fully resolved settings of one command. Built from defaults, then an
/// optional `key = value` file, then command-line flags.
struct RunConfig {
  TrainConfig train;
  double psnr_cap = 99.0;
  bool deterministic = false;
  int threads = 0;  ///< 0: OpenMP default
  std::string output;

  /// Applies one setting. Throws std::invalid_argument for unknown keys or
  /// malformed values. `profile = desk|full` resets the training settings.
  void set(const std::string& key, const std::string& value);

  /// Flat `key = value` text, `#` comments. A `profile` line is applied
  /// before every other line regardless of position.
  void merge_text(const std::string& text);
  void merge_file(const std::filesystem::path& path);

  /// Every key, one per line, in a form merge_text reads back exactly.
  std::string to_text() const;

  void validate() const;

  /// True when `key` was assigned through set() (directly or from text).
  bool assigned(const std::string& key) const { return assigned_.count(key) > 0; }

 private:
  std::set<std::string> assigned_;
};

/// Training settings only (the subset stored in checkpoints).
std::string train_config_text(const TrainConfig& config);
TrainConfig parse_train_config(const std::string& text);

}  // namespace phasenet

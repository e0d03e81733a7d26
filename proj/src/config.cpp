#include "phasenet/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace phasenet {
namespace {

std::string trim(std::string s) {
  auto space = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), space));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), space).base(), s.end());
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config: invalid value '" + value + "' for " + key);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_number<int>(key, trim(item)));
  if (out.empty()) bad_value(key, value);
  return out;
}

std::string format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

const char* format(bool v) { return v ? "true" : "false"; }

// Returns false when `key` is not a training key.
bool set_train(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "levels") c.pyramid.levels = parse_number<int>(key, value);
  else if (key == "orientations") c.pyramid.orientations = parse_number<int>(key, value);
  else if (key == "scale_factor") c.pyramid.scale_factor = parse_number<double>(key, value);
  else if (key == "transition_width") c.pyramid.transition_width = parse_number<double>(key, value);
  else if (key == "features") c.features = parse_number<int>(key, value);
  else if (key == "learning_rate") c.adam.learning_rate = parse_number<double>(key, value);
  else if (key == "beta1") c.adam.beta1 = parse_number<double>(key, value);
  else if (key == "beta2") c.adam.beta2 = parse_number<double>(key, value);
  else if (key == "adam_epsilon") c.adam.epsilon = parse_number<double>(key, value);
  else if (key == "batch_sizes") c.batch_sizes = parse_int_list(key, value);
  else if (key == "epochs") c.epochs = parse_int_list(key, value);
  else if (key == "patch") c.patch = parse_number<int>(key, value);
  else if (key == "flip_horizontal") c.flip_horizontal = parse_bool(key, value);
  else if (key == "flip_vertical") c.flip_vertical = parse_bool(key, value);
  else if (key == "freeze_trained") c.freeze_trained = parse_bool(key, value);
  else if (key == "phase_weight") c.loss.phase_weight = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else return false;
  return true;
}

struct Line {
  std::string key;
  std::string value;
  int number;
};

std::vector<Line> parse_lines(const std::string& text) {
  std::vector<Line> lines;
  std::istringstream in(text);
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
    Line l{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), number};
    if (l.key.empty()) throw std::invalid_argument("config line " + std::to_string(number) + ": empty key");
    lines.push_back(std::move(l));
  }
  return lines;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "profile") {
    if (value == "desk") train = desk_profile();
    else if (value == "full") train = TrainConfig{};
    else bad_value(key, value);
  } else if (set_train(train, key, value)) {
  } else if (key == "psnr_cap") {
    psnr_cap = parse_number<double>(key, value);
  } else if (key == "deterministic") {
    deterministic = parse_bool(key, value);
  } else if (key == "threads") {
    threads = parse_number<int>(key, value);
  } else if (key == "output") {
    output = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  assigned_.insert(key);
}

void RunConfig::merge_text(const std::string& text) {
  const auto lines = parse_lines(text);
  for (const auto& l : lines)
    if (l.key == "profile") set(l.key, l.value);
  for (const auto& l : lines) {
    if (l.key == "profile") continue;
    try {
      set(l.key, l.value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(l.number) + ": " + e.what());
    }
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    merge_text(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string RunConfig::to_text() const {
  std::string s = train_config_text(train);
  s += "psnr_cap = " + format(psnr_cap) + "\n";
  s += std::string("deterministic = ") + format(deterministic) + "\n";
  s += "threads = " + std::to_string(threads) + "\n";
  if (!output.empty()) s += "output = " + output + "\n";
  return s;
}

void RunConfig::validate() const {
  train.validate();
  if (!(psnr_cap > 0.0)) throw std::invalid_argument("config: psnr_cap must be > 0");
  if (threads < 0) throw std::invalid_argument("config: threads must be >= 0");
}

std::string train_config_text(const TrainConfig& c) {
  std::string s;
  auto line = [&s](const char* key, const std::string& value) { s += std::string(key) + " = " + value + "\n"; };
  line("levels", std::to_string(c.pyramid.levels));
  line("orientations", std::to_string(c.pyramid.orientations));
  line("scale_factor", format(c.pyramid.scale_factor));
  line("transition_width", format(c.pyramid.transition_width));
  line("features", std::to_string(c.features));
  line("learning_rate", format(c.adam.learning_rate));
  line("beta1", format(c.adam.beta1));
  line("beta2", format(c.adam.beta2));
  line("adam_epsilon", format(c.adam.epsilon));
  if (!c.batch_sizes.empty()) line("batch_sizes", format(c.batch_sizes));
  if (!c.epochs.empty()) line("epochs", format(c.epochs));
  line("patch", std::to_string(c.patch));
  line("flip_horizontal", format(c.flip_horizontal));
  line("flip_vertical", format(c.flip_vertical));
  line("freeze_trained", format(c.freeze_trained));
  line("phase_weight", format(c.loss.phase_weight));
  line("seed", std::to_string(c.seed));
  return s;
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig c;
  for (const auto& l : parse_lines(text))
    if (!set_train(c, l.key, l.value)) throw std::invalid_argument("train config: unknown key '" + l.key + "'");
  return c;
}

}  // namespace phasenet

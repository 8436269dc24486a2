#include "rdrn/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rdrn/error.hpp"

namespace rdrn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

// Shortest text that reads back to the same value.
template <typename T>
std::string num(T v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    for (auto& ch : key) {
      if (ch == '-') ch = '_';
    }
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

std::string format_key_values(const KeyValues& kv) {
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  return os.str();
}

std::set<int> parse_int_set(const std::string& s) {
  std::set<int> out;
  const std::string t = trim(s);
  if (t.empty() || t == "none") return out;
  const auto dots = t.find("..");
  if (dots != std::string::npos) {
    const long lo = to_long("range", trim(t.substr(0, dots)));
    const long hi = to_long("range", trim(t.substr(dots + 2)));
    for (long i = lo; i <= hi; ++i) out.insert(static_cast<int>(i));
    return out;
  }
  std::istringstream is(t);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.insert(static_cast<int>(to_long("set", item)));
  }
  return out;
}

std::string format_int_set(const std::set<int>& s) {
  std::string out;
  for (int v : s) {
    if (!out.empty()) out += ",";
    out += std::to_string(v);
  }
  return out.empty() ? "none" : out;
}

const std::set<std::string>& model_keys() {
  static const std::set<std::string> keys{
      "depth",         "channels",          "scale",          "nlsa_levels",
      "aux_zero_levels", "esa_reduction",   "negative_slope", "nlsa_reduction",
      "nlsa_max_key_side", "cascade_x8",    "seed"};
  return keys;
}

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys{
      "stage",      "learning_rate", "decay_steps", "decay_factor",    "batch_size",
      "patch_size", "total_steps",   "train_seed",  "augment",         "is_weights",
      "checkpoint_every"};
  return keys;
}

const std::set<std::string>& degradation_keys() {
  static const std::set<std::string> keys{"degradation", "blur_kernel_size", "blur_sigma",
                                          "noise_sigma", "noise_seed"};
  return keys;
}

RdrnConfig model_config_from(const KeyValues& kv, RdrnConfig cfg) {
  for (const auto& [k, v] : kv) {
    if (k == "depth") cfg.depth = static_cast<int>(to_long(k, v));
    else if (k == "channels") cfg.channels = static_cast<int>(to_long(k, v));
    else if (k == "scale") cfg.scale = static_cast<int>(to_long(k, v));
    else if (k == "nlsa_levels") cfg.nlsa_levels = parse_int_set(v);
    else if (k == "aux_zero_levels") cfg.aux_zero_levels = parse_int_set(v);
    else if (k == "esa_reduction") cfg.esa_reduction = static_cast<int>(to_long(k, v));
    else if (k == "negative_slope") cfg.negative_slope = static_cast<float>(to_double(k, v));
    else if (k == "nlsa_reduction") cfg.nlsa_reduction = static_cast<int>(to_long(k, v));
    else if (k == "nlsa_max_key_side") cfg.nlsa_max_key_side = static_cast<int>(to_long(k, v));
    else if (k == "cascade_x8") cfg.cascade_x8 = to_bool(k, v);
    else if (k == "seed") cfg.seed = static_cast<std::uint64_t>(to_long(k, v));
  }
  cfg.validate();
  return cfg;
}

TrainConfig train_config_from(const KeyValues& kv, TrainConfig cfg) {
  for (const auto& [k, v] : kv) {
    if (k == "stage") cfg.stage = parse_stage(v);
    else if (k == "learning_rate") cfg.learning_rate = static_cast<float>(to_double(k, v));
    else if (k == "decay_steps") cfg.decay_steps = to_long(k, v);
    else if (k == "decay_factor") cfg.decay_factor = static_cast<float>(to_double(k, v));
    else if (k == "batch_size") cfg.batch_size = static_cast<int>(to_long(k, v));
    else if (k == "patch_size") cfg.lr_patch_size = static_cast<int>(to_long(k, v));
    else if (k == "total_steps") cfg.total_steps = to_long(k, v);
    else if (k == "train_seed") cfg.seed = static_cast<std::uint64_t>(to_long(k, v));
    else if (k == "augment") cfg.augment = to_bool(k, v);
    else if (k == "is_weights") cfg.is_weights = v;
    else if (k == "checkpoint_every") cfg.checkpoint_every = to_long(k, v);
  }
  cfg.validate();
  return cfg;
}

DegradationSpec degradation_from(const KeyValues& kv, DegradationSpec spec) {
  for (const auto& [k, v] : kv) {
    if (k == "degradation") spec.kind = parse_degradation_kind(v);
    else if (k == "scale") spec.scale = static_cast<int>(to_long(k, v));
    else if (k == "blur_kernel_size") spec.blur_kernel_size = static_cast<int>(to_long(k, v));
    else if (k == "blur_sigma") spec.blur_sigma = to_double(k, v);
    else if (k == "noise_sigma") spec.noise_sigma = to_double(k, v);
    else if (k == "noise_seed") spec.rng_seed = static_cast<std::uint64_t>(to_long(k, v));
  }
  spec.validate();
  return spec;
}

KeyValues to_key_values(const RdrnConfig& c) {
  return {{"depth", std::to_string(c.depth)},
          {"channels", std::to_string(c.channels)},
          {"scale", std::to_string(c.scale)},
          {"nlsa_levels", format_int_set(c.nlsa_levels)},
          {"aux_zero_levels", format_int_set(c.aux_zero_levels)},
          {"esa_reduction", std::to_string(c.esa_reduction)},
          {"negative_slope", num(c.negative_slope)},
          {"nlsa_reduction", std::to_string(c.nlsa_reduction)},
          {"nlsa_max_key_side", std::to_string(c.nlsa_max_key_side)},
          {"cascade_x8", c.cascade_x8 ? "true" : "false"},
          {"seed", std::to_string(c.seed)}};
}

KeyValues to_key_values(const TrainConfig& c) {
  return {{"stage", to_string(c.stage)},
          {"learning_rate", num(c.learning_rate)},
          {"decay_steps", std::to_string(c.decay_steps)},
          {"decay_factor", num(c.decay_factor)},
          {"batch_size", std::to_string(c.batch_size)},
          {"patch_size", std::to_string(c.lr_patch_size)},
          {"total_steps", std::to_string(c.total_steps)},
          {"train_seed", std::to_string(c.seed)},
          {"augment", c.augment ? "true" : "false"},
          {"is_weights", c.is_weights},
          {"checkpoint_every", std::to_string(c.checkpoint_every)}};
}

KeyValues to_key_values(const DegradationSpec& s) {
  return {{"degradation", to_string(s.kind)},
          {"scale", std::to_string(s.scale)},
          {"blur_kernel_size", std::to_string(s.blur_kernel_size)},
          {"blur_sigma", num(s.blur_sigma)},
          {"noise_sigma", num(s.noise_sigma)},
          {"noise_seed", std::to_string(s.rng_seed)}};
}

}  // namespace rdrn

// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fovr {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_int(std::string_view key, std::string_view v) {
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected an integer, got '" + std::string(v) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + std::string(key) + "': expected true or false");
}

std::string real_text(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(RunConfig&, std::string_view, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define FOVR_INT(member, T)                                                                             \
  Field {                                                                                               \
    [](RunConfig& c, std::string_view k, std::string_view v) { c.member = parse_int<T>(k, v); },        \
        [](const RunConfig& c) { return std::to_string(c.member); }                                     \
  }
#define FOVR_REAL(member)                                                                          \
  Field {                                                                                          \
    [](RunConfig& c, std::string_view k, std::string_view v) { c.member = parse_real(k, v); },     \
        [](const RunConfig& c) { return real_text(c.member); }                                     \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"seed", FOVR_INT(seed, std::uint64_t)},
      {"model.seed", FOVR_INT(model_seed, std::uint64_t)},
      {"fov.seed", FOVR_INT(fov_seed, std::uint64_t)},
      {"log_every", FOVR_INT(log_every, int)},
      {"plots", Field{[](RunConfig& c, std::string_view k, std::string_view v) { c.plots = parse_bool(k, v); },
                      [](const RunConfig& c) { return std::string(c.plots ? "true" : "false"); }}},
      {"model.d", FOVR_INT(model.d, std::size_t)},
      {"model.n_layers", FOVR_INT(model.n_layers, std::size_t)},
      {"model.split", FOVR_INT(model.split, std::size_t)},
      {"model.n_heads", FOVR_INT(model.n_heads, std::size_t)},
      {"model.max_pos", FOVR_INT(model.max_pos, std::size_t)},
      {"model.init_std", FOVR_REAL(model.init_std)},
      {"fov.hidden_mid", FOVR_INT(fov.hidden_mid, std::size_t)},
      {"fov.sigma", FOVR_REAL(fov.sigma)},
      {"fov.min_size", FOVR_REAL(fov.min_size)},
      {"fov.max_size", FOVR_REAL(fov.max_size)},
      {"env.box_jitter_px", FOVR_REAL(env.box_jitter_px)},
      {"env.noise_max", FOVR_REAL(env.noise_max)},
      {"data.train_count", FOVR_INT(data.train_count, int)},
      {"data.eval_count", FOVR_INT(data.eval_count, int)},
      {"data.train_seed", FOVR_INT(data.train_seed, std::uint64_t)},
      {"data.eval_seed", FOVR_INT(data.eval_seed, std::uint64_t)},
      {"data.identify_fraction", FOVR_REAL(data.identify_fraction)},
      {"data.eval_identify_fraction", FOVR_REAL(data.eval_identify_fraction)},
      {"data.rationale",
       Field{[](RunConfig& c, std::string_view, std::string_view v) {
               try {
                 c.data.rationale = parse_rationale_mode(v);
               } catch (const std::invalid_argument& e) {
                 throw ConfigError(e.what());
               }
             },
             [](const RunConfig& c) { return std::string(to_string(c.data.rationale)); }}},
      {"coldstart.epochs", FOVR_INT(coldstart.epochs, int)},
      {"coldstart.batch_size", FOVR_INT(coldstart.batch_size, int)},
      {"coldstart.lr", FOVR_REAL(coldstart.lr)},
      {"coldstart.lambda_box", FOVR_REAL(coldstart.lambda_box)},
      {"rl.steps", FOVR_INT(rl.steps, int)},
      {"rl.epochs_per_group", FOVR_INT(rl.epochs_per_group, int)},
      {"rl.lr", FOVR_REAL(rl.lr)},
      {"rl.temperature", FOVR_REAL(rl.temperature)},
      {"rl.reward",
       Field{[](RunConfig& c, std::string_view, std::string_view v) {
               if (v == "answer") {
                 c.rl.reward = RewardKind::answer;
               } else if (v == "grounding") {
                 c.rl.reward = RewardKind::grounding;
               } else {
                 throw ConfigError("rl.reward must be answer or grounding");
               }
             },
             [](const RunConfig& c) { return std::string(c.rl.reward == RewardKind::answer ? "answer" : "grounding"); }}},
      {"rl.group_size", FOVR_INT(rl.loss.group_size, int)},
      {"rl.beta", FOVR_REAL(rl.loss.beta)},
      {"rl.clip_eps", FOVR_REAL(rl.loss.clip_eps)},
      {"rl.lambda_fov", FOVR_REAL(rl.loss.lambda_fov)},
      {"rl.lambda_reg", FOVR_REAL(rl.loss.lambda_reg)},
      {"decode.t_max", FOVR_INT(t_max, int)},
      {"decode.k_max", FOVR_INT(k_max, int)},
  };
  return table;
}

#undef FOVR_INT
#undef FOVR_REAL

}  // namespace

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(cfg, key, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::validate() const {
  try {
    ModelConfig m = model;
    m.validate();
    FovPolicyConfig f = fov;
    f.hidden_in = model.d;
    f.validate();
    rl.loss.validate();
    eval_decode().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (fov.hidden_in != model.d) throw ConfigError("fov hidden_in must equal model.d");
  if (data.train_count < 0 || data.eval_count < 0) throw ConfigError("dataset counts must be >= 0");
  if (data.identify_fraction < 0 || data.identify_fraction > 1 || data.eval_identify_fraction < 0 ||
      data.eval_identify_fraction > 1) {
    throw ConfigError("identify fractions must lie in [0,1]");
  }
  if (coldstart.epochs < 0 || coldstart.batch_size < 1 || coldstart.lr < 0 || coldstart.lambda_box < 0) {
    throw ConfigError("coldstart settings out of range");
  }
  if (rl.steps < 0 || rl.epochs_per_group < 1 || rl.lr < 0 || rl.temperature <= 0) {
    throw ConfigError("rl settings out of range");
  }
  if (log_every < 1) throw ConfigError("log_every must be >= 1");
  if (env.box_jitter_px < 0 || env.box_jitter_px > 3 || env.noise_max < 0 || env.noise_max > 0.5) {
    throw ConfigError("env settings out of range");
  }
}

DecodeConfig RunConfig::eval_decode() const {
  DecodeConfig d;
  d.t_max = t_max;
  d.k_max = k_max;
  d.temperature = 0.0;
  d.sample_boxes = false;
  return d;
}

DecodeConfig RunConfig::rollout_decode() const {
  DecodeConfig d = eval_decode();
  d.temperature = rl.temperature;
  d.sample_boxes = true;
  return d;
}

std::vector<std::pair<std::string, std::string>> RunConfig::items() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(*this));
  return out;
}

std::string RunConfig::to_text() const {
  std::string s;
  for (const auto& [k, v] : items()) s += k + " = " + v + "\n";
  return s;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    }
    set_config_value(cfg, key, value);
  }
  cfg.fov.hidden_in = cfg.model.d;
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace fovr

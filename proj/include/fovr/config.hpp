// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Flat `key = value` run configuration. Lines starting with '#' are comments;
// unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fovr/coldstart.hpp"
#include "fovr/decode.hpp"
#include "fovr/env.hpp"
#include "fovr/fov_policy.hpp"
#include "fovr/grpo.hpp"
#include "fovr/model.hpp"

namespace fovr {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DataConfig {
  int train_count = 5000;
  int eval_count = 1000;
  std::uint64_t train_seed = 1;
  std::uint64_t eval_seed = 1'000'003;
  double identify_fraction = 0.75;       // share of identify episodes in the train split
  double eval_identify_fraction = 1.0;   // share of identify episodes in the eval split
  RationaleMode rationale = RationaleMode::interleaved;
};

struct ColdstartRunConfig {
  int epochs = 3;
  int batch_size = 4;
  double lr = 3e-4;
  double lambda_box = 1.0;
};

struct RlRunConfig {
  int steps = 2000;  // rollout groups
  int epochs_per_group = 1;
  double lr = 1e-4;
  double temperature = 1.0;
  RewardKind reward = RewardKind::answer;
  RlConfig loss;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::uint64_t model_seed = 17;
  std::uint64_t fov_seed = 29;
  int log_every = 50;
  bool plots = true;
  ModelConfig model;
  FovPolicyConfig fov;
  env::EnvConfig env;
  DataConfig data;
  ColdstartRunConfig coldstart;
  RlRunConfig rl;
  int t_max = 256;
  int k_max = 4;

  void validate() const;
  DecodeConfig eval_decode() const;  // greedy, deterministic boxes
  DecodeConfig rollout_decode() const;  // sampled tokens and boxes

  /// Every key with its current value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> items() const;
  std::string to_text() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies a single `key = value` assignment.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

}  // namespace fovr

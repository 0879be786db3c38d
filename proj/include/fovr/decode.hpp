// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Interleaved text/foveation decoding over a cached Memory, single-sample and
// lockstep-batched with left-padding equalization.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fovr/env.hpp"
#include "fovr/fov_policy.hpp"
#include "fovr/model.hpp"

namespace fovr {

enum class OverrideMode : std::uint8_t { learned, fixed, random };

/// Replacement rule for one half of a box: the center pair or the size pair.
struct BoxOverride {
  OverrideMode mode = OverrideMode::learned;
  double a = 0.0, b = 0.0;  // fixed values, (cx, cy) or (w, h)
  friend bool operator==(const BoxOverride&, const BoxOverride&) = default;
};

/// Parses "learned", "random" or "fixed:A,B".
BoxOverride parse_box_override(std::string_view text);
std::string to_string(const BoxOverride& o);

struct Interventions {
  std::optional<int> fov_cap;
  BoxOverride center;
  BoxOverride size;
  bool mask_fov = false;  // suppress <fov> at every step
};

struct DecodeConfig {
  int t_max = 256;
  int k_max = 4;
  double temperature = 1.0;  // 0 selects greedy decoding
  bool sample_boxes = false;
  Interventions interventions;

  void validate() const;
};

enum class Terminal : std::uint8_t { eos, length_cap };

struct TokenStep {
  TokenId token = tok::kPad;
  double log_prob = 0.0;    // log softmax(logits)[token] after masking, temperature 1
  bool fov_masked = false;  // <fov> was disallowed at this step
  std::size_t entry = 0;    // index of the token in Trajectory::entries
};

struct FovStep {
  std::size_t token_index = 0;  // index into Trajectory::tokens of the <fov>
  Array h;                      // agent state the box was drawn from
  FovSample sample;
  env::PatchBlock block;
};

struct TrajectoryStats {
  int n_fov = 0;     // evidence tokens acquired, overlap counted
  int t_fov = 0;     // foveation steps
  double rho = 0.0;  // fraction of the high-res image revealed
  friend bool operator==(const TrajectoryStats&, const TrajectoryStats&) = default;
};

struct Trajectory {
  std::size_t prompt_size = 0;
  std::vector<MemoryEntry> entries;  // real history with position ids, prompt first
  std::vector<TokenStep> tokens;     // model-sampled text and <fov> tokens
  std::vector<FovStep> fov_steps;
  Terminal terminal = Terminal::length_cap;
  TrajectoryStats stats;

  std::vector<TokenId> token_ids() const;
};

/// Observation o_1: the low-res view as visual entries followed by the question.
std::vector<MemoryEntry> initial_observation(const env::Episode& episode, std::size_t patch);

Trajectory decode(const TransformerModel& model, const FovPolicy& policy, const env::Episode& episode,
                  const DecodeConfig& cfg, std::uint64_t seed);

/// Per-sample block length and PAD count of one lockstep step.
struct BatchStep {
  std::vector<std::size_t> block;
  std::vector<std::size_t> pads;
};

/// Sample i draws from the stream seeded with seed ^ i, so results match
/// decode(..., seed ^ i) for each episode. `log`, when set, receives one
/// record per lockstep step.
std::vector<Trajectory> decode_batch(const TransformerModel& model, const FovPolicy& policy,
                                     const std::vector<env::Episode>& episodes, const DecodeConfig& cfg,
                                     std::uint64_t seed, std::vector<BatchStep>* log = nullptr);

TrajectoryStats compute_stats(const Trajectory& traj, const env::Episode& episode);

/// Per-sample stream seed shared by decode_batch and group rollouts.
inline std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) { return seed ^ index; }

}  // namespace fovr

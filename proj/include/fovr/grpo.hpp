// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Group-relative policy optimization over interleaved trajectories: rewards,
// mean-centered advantages, and the token, box and region losses.

#include <cstdint>
#include <optional>
#include <vector>

#include "fovr/decode.hpp"
#include "fovr/env.hpp"
#include "fovr/fov_policy.hpp"
#include "fovr/model.hpp"

namespace fovr {

struct RlConfig {
  int group_size = 8;
  double beta = 0.04;
  double clip_eps = 0.2;
  double lambda_fov = 1.0;
  double lambda_reg = 0.2;

  void validate() const;
};

enum class RewardKind : std::uint8_t { answer, grounding };

struct Rewards {
  double acc = 0.0;
  double fmt = 0.0;
  friend bool operator==(const Rewards&, const Rewards&) = default;
};

/// True iff the tokens are THINK_OPEN ... THINK_CLOSE ANS_OPEN ... ANS_CLOSE
/// (optionally followed by EOS) with no other tag tokens outside that frame.
bool well_formed(const std::vector<TokenId>& tokens);

/// Tokens strictly between the first ANS_OPEN and the following ANS_CLOSE.
std::optional<std::vector<TokenId>> answer_span(const std::vector<TokenId>& tokens);

/// Answer tasks score an exact answer match; grounding scores IoU >= 0.5
/// between the first executed box and the first oracle box.
Rewards reward(const Trajectory& traj, const env::Episode& episode, RewardKind kind = RewardKind::answer);

struct Advantages {
  std::vector<double> a;      // from r_acc + r_fmt
  std::vector<double> a_acc;  // from r_acc alone
};

Advantages advantages(const std::vector<Rewards>& rewards);

/// Mean-centered copy of `values`.
std::vector<double> center(const std::vector<double>& values);

struct RewardedGroup {
  const env::Episode* episode = nullptr;
  std::vector<Trajectory> trajectories;
  std::vector<Rewards> rewards;
  Advantages adv;
};

RewardedGroup make_group(const env::Episode& episode, std::vector<Trajectory> trajectories,
                         RewardKind kind = RewardKind::answer);

struct TokenLossNodes {
  NodeId loss;
  double kl_mean = 0.0;  // average KL estimate over all scored tokens
};

/// Clipped surrogate with KL anchoring to `ref_model`, averaged per trajectory
/// over its sampled tokens and then over the group.
TokenLossNodes grpo_token_loss(ParamBinder& bind, const TransformerModel& model, const TransformerModel& ref_model,
                               const RewardedGroup& group, const RlConfig& cfg);

/// Ratio-weighted box-policy objective on the stored states and pre-clamp draws.
NodeId grpo_fov_loss(ParamBinder& fov_bind, const FovPolicy& policy, const RewardedGroup& group);

/// Area penalty on the executed boxes of correct trajectories.
NodeId region_reg_loss(ParamBinder& fov_bind, const FovPolicy& policy, const RewardedGroup& group);

struct RlLossNodes {
  NodeId total;
  NodeId tok;
  NodeId fov;
  NodeId reg;
  double kl_mean = 0.0;
};

RlLossNodes rl_loss(ParamBinder& model_bind, ParamBinder& fov_bind, const TransformerModel& model,
                    const TransformerModel& ref_model, const FovPolicy& policy, const RewardedGroup& group,
                    const RlConfig& cfg);

/// Per-token KL estimate r - log r - 1 with log r = logp_ref - logp_new.
double kl_estimate(double logp_new, double logp_ref);

/// tok + lambda_fov * fov + lambda_reg * reg.
double rl_objective(double tok, double fov, double reg, const RlConfig& cfg);

}  // namespace fovr

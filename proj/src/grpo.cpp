// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/grpo.hpp"

#include <cmath>
#include <stdexcept>

namespace fovr {

void RlConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("RlConfig: group_size must be >= 2");
  if (beta < 0.0 || clip_eps < 0.0 || lambda_fov < 0.0 || lambda_reg < 0.0) {
    throw std::invalid_argument("RlConfig: beta, clip_eps, lambda_fov and lambda_reg must be >= 0");
  }
}

namespace {

bool is_tag(TokenId t) { return t >= tok::kThinkOpen && t <= tok::kAnsClose; }

std::vector<Graph::LogProbRequest> token_requests(const Trajectory& traj) {
  std::vector<Graph::LogProbRequest> out;
  out.reserve(traj.tokens.size());
  for (const auto& s : traj.tokens) out.push_back({s.entry - 1, s.token, masked_columns(s.fov_masked)});
  return out;
}

std::vector<double> reference_log_probs(const TransformerModel& ref_model, const Trajectory& traj) {
  Graph g;
  ParamBinder bind(g, ref_model.params());
  const SequenceNodes seq = ref_model.forward_graph(bind, traj.entries);
  const Array& v = g.value(g.token_log_probs(seq.logits, token_requests(traj)));
  return {v.data().begin(), v.data().end()};
}

}  // namespace

bool well_formed(const std::vector<TokenId>& tokens) {
  std::size_t n = tokens.size();
  if (n > 0 && tokens[n - 1] == tok::kEos) --n;
  if (n < 4 || tokens[0] != tok::kThinkOpen || tokens[n - 1] != tok::kAnsClose) return false;
  std::size_t think_close = 0, ans_open = 0, count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const TokenId t = tokens[i];
    if (t == tok::kEos) return false;
    if (!is_tag(t)) continue;
    ++count;
    if (t == tok::kThinkClose) think_close = i;
    if (t == tok::kAnsOpen) ans_open = i;
  }
  return count == 4 && think_close > 0 && ans_open == think_close + 1;
}

std::optional<std::vector<TokenId>> answer_span(const std::vector<TokenId>& tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] != tok::kAnsOpen) continue;
    for (std::size_t j = i + 1; j < tokens.size(); ++j) {
      if (tokens[j] == tok::kAnsClose) return std::vector<TokenId>(tokens.begin() + i + 1, tokens.begin() + j);
    }
    return std::nullopt;
  }
  return std::nullopt;
}

Rewards reward(const Trajectory& traj, const env::Episode& episode, RewardKind kind) {
  const std::vector<TokenId> ids = traj.token_ids();
  Rewards r;
  r.fmt = well_formed(ids) ? 1.0 : 0.0;
  if (kind == RewardKind::answer) {
    const auto span = answer_span(ids);
    r.acc = span && *span == episode.answer ? 1.0 : 0.0;
  } else {
    if (!traj.fov_steps.empty() && !episode.oracle_boxes.empty()) {
      const double v = env::iou(traj.fov_steps.front().sample.box, episode.oracle_boxes.front(),
                                episode.high_res.height, episode.high_res.width);
      r.acc = v >= 0.5 ? 1.0 : 0.0;
    }
  }
  return r;
}

std::vector<double> center(const std::vector<double>& values) {
  if (values.empty()) return {};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] - mean;
  return out;
}

Advantages advantages(const std::vector<Rewards>& rewards) {
  std::vector<double> total, acc;
  for (const auto& r : rewards) {
    total.push_back(r.acc + r.fmt);
    acc.push_back(r.acc);
  }
  return {center(total), center(acc)};
}

RewardedGroup make_group(const env::Episode& episode, std::vector<Trajectory> trajectories, RewardKind kind) {
  RewardedGroup g;
  g.episode = &episode;
  g.trajectories = std::move(trajectories);
  for (const auto& t : g.trajectories) g.rewards.push_back(reward(t, episode, kind));
  g.adv = advantages(g.rewards);
  return g;
}

double kl_estimate(double logp_new, double logp_ref) {
  const double d = logp_ref - logp_new;
  return std::exp(d) - d - 1.0;
}

double rl_objective(double tok, double fov, double reg, const RlConfig& cfg) {
  return tok + cfg.lambda_fov * fov + cfg.lambda_reg * reg;
}

TokenLossNodes grpo_token_loss(ParamBinder& bind, const TransformerModel& model, const TransformerModel& ref_model,
                               const RewardedGroup& group, const RlConfig& cfg) {
  Graph& g = bind.graph();
  const std::size_t n = group.trajectories.size();
  if (n == 0 || group.adv.a.size() != n) throw std::invalid_argument("grpo_token_loss: group has no advantages");
  NodeId total = g.constant(Array::scalar(0.0));
  double kl_sum = 0.0;
  std::size_t kl_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Trajectory& traj = group.trajectories[i];
    if (traj.tokens.empty()) throw std::invalid_argument("grpo_token_loss: trajectory without sampled tokens");
    std::vector<double> old_lp, ref_lp = reference_log_probs(ref_model, traj);
    for (const auto& s : traj.tokens) old_lp.push_back(s.log_prob);

    const SequenceNodes seq = model.forward_graph(bind, traj.entries);
    const NodeId lp = g.token_log_probs(seq.logits, token_requests(traj));
    const double a = group.adv.a[i];
    const NodeId ratio = g.exp(g.sub(lp, g.constant(Array::vector(old_lp))));
    const NodeId surr = g.minimum(g.scale(ratio, a), g.scale(g.clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps), a));
    const NodeId d = g.sub(g.constant(Array::vector(ref_lp)), lp);
    const NodeId kl = g.add_scalar(g.sub(g.exp(d), d), -1.0);
    total = g.add(total, g.mean(g.sub(surr, g.scale(kl, cfg.beta))));
    for (double v : g.value(kl).data()) kl_sum += v;
    kl_count += traj.tokens.size();
  }
  return {g.scale(total, -1.0 / static_cast<double>(n)), kl_sum / static_cast<double>(kl_count)};
}

NodeId grpo_fov_loss(ParamBinder& fov_bind, const FovPolicy& policy, const RewardedGroup& group) {
  Graph& g = fov_bind.graph();
  const std::size_t n = group.trajectories.size();
  if (n == 0 || group.adv.a_acc.size() != n) throw std::invalid_argument("grpo_fov_loss: group has no advantages");
  NodeId total = g.constant(Array::scalar(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double a = group.adv.a_acc[i];
    for (const auto& step : group.trajectories[i].fov_steps) {
      if (step.h.size() != policy.config().hidden_in) throw std::invalid_argument("grpo_fov_loss: missing stored state");
      const NodeId lp = policy.log_prob_graph(fov_bind, g.constant(step.h), step.sample.raw);
      const NodeId ratio = g.exp(g.add_scalar(lp, -step.sample.log_prob));
      total = g.add(total, g.scale(ratio, a));
    }
  }
  return g.scale(total, -1.0 / static_cast<double>(n));
}

NodeId region_reg_loss(ParamBinder& fov_bind, const FovPolicy& policy, const RewardedGroup& group) {
  Graph& g = fov_bind.graph();
  const std::size_t n = group.trajectories.size();
  if (n == 0 || group.rewards.size() != n) throw std::invalid_argument("region_reg_loss: group has no rewards");
  NodeId total = g.constant(Array::scalar(0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double r = group.rewards[i].acc;
    if (r == 0.0) continue;
    for (const auto& step : group.trajectories[i].fov_steps) {
      const NodeId box = policy.sampled_box_graph(fov_bind, g.constant(step.h), step.sample.noise);
      const NodeId area = g.sum(g.mul(g.slice_cols(box, 2, 3), g.slice_cols(box, 3, 4)));
      total = g.add(total, g.scale(area, r));
    }
  }
  return g.scale(total, 1.0 / static_cast<double>(n));
}

RlLossNodes rl_loss(ParamBinder& model_bind, ParamBinder& fov_bind, const TransformerModel& model,
                    const TransformerModel& ref_model, const FovPolicy& policy, const RewardedGroup& group,
                    const RlConfig& cfg) {
  Graph& g = model_bind.graph();
  const TokenLossNodes tok = grpo_token_loss(model_bind, model, ref_model, group, cfg);
  const NodeId fov = grpo_fov_loss(fov_bind, policy, group);
  const NodeId reg = region_reg_loss(fov_bind, policy, group);
  const NodeId total = g.add(g.add(tok.loss, g.scale(fov, cfg.lambda_fov)), g.scale(reg, cfg.lambda_reg));
  return {total, tok.loss, fov, reg, tok.kl_mean};
}

}  // namespace fovr

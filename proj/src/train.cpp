// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fovr/rng.hpp"

namespace fovr {

std::vector<env::Episode> make_split(int count, std::uint64_t seed, double identify_fraction,
                                     const env::EnvConfig& cfg) {
  Rng rng(seed);
  std::vector<env::Episode> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    const env::TaskKind kind = rng.uniform() < identify_fraction ? env::TaskKind::identify : env::TaskKind::compare;
    out.push_back(env::generate_episode(rng.raw(), kind, cfg));
  }
  return out;
}

namespace {

struct Snapshot {
  ParameterStore model, fov;
};

void check_finite_loss(double v, int step, const char* what, TransformerModel& model, FovPolicy& policy,
                       const Snapshot& snap) {
  if (std::isfinite(v)) return;
  model.params() = snap.model;
  policy.params() = snap.fov;
  throw NonFiniteLoss(std::string("non-finite ") + what + " at step " + std::to_string(step), step);
}

bool grads_finite(const GradStore& g) { return std::isfinite(g.max_abs()); }

}  // namespace

ColdstartSummary train_coldstart(TransformerModel& model, FovPolicy& policy, const std::vector<TargetSequence>& targets,
                                 const ColdstartRunConfig& cfg, std::uint64_t seed, const StepCallback& on_step) {
  ColdstartSummary summary;
  if (targets.empty() || cfg.epochs == 0) return summary;
  Adam model_opt(model.params(), AdamConfig{cfg.lr});
  Adam fov_opt(policy.params(), AdamConfig{cfg.lr});
  GradStore model_grads(model.params()), fov_grads(policy.params());
  const ColdstartConfig loss_cfg{cfg.lambda_box};
  Rng rng(seed);
  std::vector<std::size_t> order(targets.size());
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      model_grads.zero();
      fov_grads.zero();
      double lm = 0.0, box = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        Graph g;
        ParamBinder mb(g, model.params());
        ParamBinder fb(g, policy.params());
        const ColdstartNodes n = coldstart_loss(mb, fb, model, policy, targets[order[k]], loss_cfg);
        g.backward(n.total);
        mb.accumulate(model_grads);
        fb.accumulate(fov_grads);
        lm += g.value(n.lm).item();
        box += g.value(n.box).item();
      }
      const double count = static_cast<double>(end - start);
      lm /= count;
      box /= count;
      ++summary.steps;
      const Snapshot snap{model.params(), policy.params()};
      check_finite_loss(lm + box, summary.steps, "coldstart loss", model, policy, snap);
      if (!grads_finite(model_grads) || !grads_finite(fov_grads)) {
        check_finite_loss(std::nan(""), summary.steps, "coldstart gradient", model, policy, snap);
      }
      model_grads.scale(1.0 / count);
      fov_grads.scale(1.0 / count);
      model_opt.step(model.params(), model_grads);
      fov_opt.step(policy.params(), fov_grads);
      if (summary.steps == 1) summary.first_loss = lm + box;
      summary.last_loss = lm + box;
      if (on_step) {
        MetricsRow row;
        row.step = summary.steps;
        row.stage = "coldstart";
        row.loss_lm = lm;
        row.loss_box = box;
        on_step(row);
      }
    }
  }
  return summary;
}

RlSummary train_rl(TransformerModel& model, FovPolicy& policy, const TransformerModel& ref_model,
                   const std::vector<env::Episode>& episodes, const RlRunConfig& cfg, const DecodeConfig& rollout,
                   std::uint64_t seed, const StepCallback& on_step) {
  cfg.loss.validate();
  RlSummary summary;
  if (episodes.empty() || cfg.steps == 0) return summary;
  Adam model_opt(model.params(), AdamConfig{cfg.lr});
  Adam fov_opt(policy.params(), AdamConfig{cfg.lr});
  GradStore model_grads(model.params()), fov_grads(policy.params());
  const std::size_t G = static_cast<std::size_t>(cfg.loss.group_size);
  std::vector<double> rho_history;
  double acc_total = 0.0;

  for (int step = 1; step <= cfg.steps; ++step) {
    const env::Episode& ep = episodes[static_cast<std::size_t>(step - 1) % episodes.size()];
    const std::uint64_t group_seed = seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(step);
    std::vector<Trajectory> trajs;
    trajs.reserve(G);
    for (std::size_t i = 0; i < G; ++i) trajs.push_back(decode(model, policy, ep, rollout, sample_seed(group_seed, i)));
    const RewardedGroup group = make_group(ep, std::move(trajs), cfg.reward);

    double tok = 0.0, fov = 0.0, reg = 0.0, kl = 0.0;
    for (int e = 0; e < cfg.epochs_per_group; ++e) {
      model_grads.zero();
      fov_grads.zero();
      Graph g;
      ParamBinder mb(g, model.params());
      ParamBinder fb(g, policy.params());
      const RlLossNodes n = rl_loss(mb, fb, model, ref_model, policy, group, cfg.loss);
      g.backward(n.total);
      mb.accumulate(model_grads);
      fb.accumulate(fov_grads);
      tok = g.value(n.tok).item();
      fov = g.value(n.fov).item();
      reg = g.value(n.reg).item();
      kl = n.kl_mean;
      const Snapshot snap{model.params(), policy.params()};
      check_finite_loss(g.value(n.total).item(), step, "rl loss", model, policy, snap);
      if (!grads_finite(model_grads) || !grads_finite(fov_grads)) {
        check_finite_loss(std::nan(""), step, "rl gradient", model, policy, snap);
      }
      model_opt.step(model.params(), model_grads);
      fov_opt.step(policy.params(), fov_grads);
    }

    double acc = 0.0, fmt = 0.0, nfov = 0.0, rho = 0.0, tfov = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
      acc += group.rewards[i].acc;
      fmt += group.rewards[i].fmt;
      nfov += group.trajectories[i].stats.n_fov;
      rho += group.trajectories[i].stats.rho;
      tfov += group.trajectories[i].stats.t_fov;
    }
    const double g_count = static_cast<double>(G);
    acc_total += acc;
    rho_history.push_back(rho / g_count);
    summary.steps = step;
    if (on_step) {
      MetricsRow row;
      row.step = step;
      row.stage = "rl";
      row.loss_tok = tok;
      row.loss_fov = fov;
      row.loss_reg = reg;
      row.kl = kl;
      row.acc = acc / g_count;
      row.r_fmt = fmt / g_count;
      row.n_fov_mean = nfov / g_count;
      row.rho_mean = rho / g_count;
      row.t_fov_mean = tfov / g_count;
      on_step(row);
    }
  }
  summary.acc_mean = acc_total / (static_cast<double>(G) * summary.steps);
  const std::size_t tail = std::max<std::size_t>(1, rho_history.size() / 4);
  summary.rho_tail =
      std::accumulate(rho_history.end() - static_cast<std::ptrdiff_t>(tail), rho_history.end(), 0.0) /
      static_cast<double>(tail);
  return summary;
}

std::string describe(const Interventions& iv) {
  std::string s = "center=" + to_string(iv.center) + " size=" + to_string(iv.size);
  s += " fov_cap=" + (iv.fov_cap ? std::to_string(*iv.fov_cap) : std::string("none"));
  s += iv.mask_fov ? " mask_fov=true" : " mask_fov=false";
  return s;
}

EvalReport evaluate(const TransformerModel& model, const FovPolicy& policy, const std::vector<env::Episode>& episodes,
                    const DecodeConfig& cfg, std::uint64_t seed) {
  EvalReport r;
  r.count = static_cast<int>(episodes.size());
  r.interventions = describe(cfg.interventions);
  std::vector<double> nfov, rho, tfov;
  double acc = 0.0, fmt = 0.0;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const Trajectory t = decode(model, policy, episodes[i], cfg, sample_seed(seed, i));
    const Rewards rw = reward(t, episodes[i]);
    acc += rw.acc;
    fmt += rw.fmt;
    r.correct.push_back(static_cast<int>(rw.acc));
    nfov.push_back(t.stats.n_fov);
    rho.push_back(t.stats.rho);
    tfov.push_back(t.stats.t_fov);
  }
  if (!episodes.empty()) {
    r.accuracy = acc / static_cast<double>(episodes.size());
    r.format_rate = fmt / static_cast<double>(episodes.size());
  }
  r.n_fov = summarize(nfov);
  r.rho = summarize(rho);
  r.t_fov = summarize(tfov);
  return r;
}

}  // namespace fovr

// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/decode.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fovr/kernels.hpp"
#include "fovr/rng.hpp"

namespace fovr {

namespace {

double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

BoxOverride parse_box_override(std::string_view text) {
  if (text == "learned") return {};
  if (text == "random") return {OverrideMode::random, 0.0, 0.0};
  if (text.substr(0, 6) == "fixed:") {
    const auto rest = text.substr(6);
    const auto comma = rest.find(',');
    if (comma == std::string_view::npos) throw std::invalid_argument("fixed override needs two values: A,B");
    return {OverrideMode::fixed, parse_double(rest.substr(0, comma)), parse_double(rest.substr(comma + 1))};
  }
  throw std::invalid_argument("unknown box override '" + std::string(text) + "' (learned | fixed:A,B | random)");
}

std::string to_string(const BoxOverride& o) {
  switch (o.mode) {
    case OverrideMode::learned:
      return "learned";
    case OverrideMode::random:
      return "random";
    case OverrideMode::fixed:
      return "fixed:" + std::to_string(o.a) + "," + std::to_string(o.b);
  }
  return "learned";
}

void DecodeConfig::validate() const {
  if (t_max < 1) throw std::invalid_argument("DecodeConfig: t_max must be >= 1");
  if (k_max < 0) throw std::invalid_argument("DecodeConfig: k_max must be >= 0");
  if (!(temperature >= 0.0)) throw std::invalid_argument("DecodeConfig: temperature must be >= 0");
  if (interventions.fov_cap && *interventions.fov_cap < 0) throw std::invalid_argument("DecodeConfig: negative fov_cap");
  const auto& c = interventions.center;
  if (c.mode == OverrideMode::fixed && (std::fabs(c.a) > 1.0 || std::fabs(c.b) > 1.0)) {
    throw std::invalid_argument("DecodeConfig: fixed center outside [-1,1]");
  }
  const auto& s = interventions.size;
  if (s.mode == OverrideMode::fixed &&
      (s.a < env::kMinBoxSize || s.a > 1.0 || s.b < env::kMinBoxSize || s.b > 1.0)) {
    throw std::invalid_argument("DecodeConfig: fixed size outside [0.1,1]");
  }
}

std::vector<TokenId> Trajectory::token_ids() const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.token);
  return out;
}

std::vector<MemoryEntry> initial_observation(const env::Episode& episode, std::size_t patch) {
  const env::PatchBlock view = env::tokenize(episode.low_res, static_cast<int>(patch));
  std::vector<MemoryEntry> out;
  for (std::size_t i = 0; i < view.patches.rows(); ++i) {
    out.push_back(MemoryEntry::visual_patch(
        std::span<const double>(view.patches.raw() + i * view.patches.cols(), view.patches.cols())));
  }
  for (TokenId t : episode.question) out.push_back(MemoryEntry::text_token(t));
  return out;
}

TrajectoryStats compute_stats(const Trajectory& traj, const env::Episode& episode) {
  TrajectoryStats s;
  std::vector<env::PixelRect> rects;
  for (const auto& f : traj.fov_steps) {
    s.n_fov += f.block.m();
    rects.push_back(f.block.source_rect);
  }
  s.t_fov = static_cast<int>(traj.fov_steps.size());
  s.rho = env::union_area_fraction(rects, episode.high_res.height, episode.high_res.width);
  return s;
}

namespace {

// One in-flight rollout. choose() picks the next action from the latest
// logits and stages the entries it appends; the caller then feeds them to
// the model (after any batch padding).
struct Rollout {
  Rollout(const TransformerModel& model, const env::Episode& ep, std::uint64_t seed)
      : episode(&ep), mem(model.config()), rng(seed) {
    pending = initial_observation(ep, model.config().patch);
    traj.prompt_size = pending.size();
  }

  const env::Episode* episode;
  Memory mem;
  Rng rng;
  Trajectory traj;
  StepOutput last;
  std::vector<MemoryEntry> pending;
  bool done = false;

  void choose(const FovPolicy& policy, const DecodeConfig& cfg);
  void advance(const TransformerModel& model) {
    last = model.forward_step(mem, pending);
    pending.clear();
  }
  Trajectory finish() {
    traj.entries = mem.real_entries();
    traj.stats = compute_stats(traj, *episode);
    return std::move(traj);
  }
};

TokenId pick_token(std::span<const double> logits, double temperature, Rng& rng) {
  if (temperature == 0.0) {
    return static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  std::vector<double> scaled(logits.size()), probs(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    scaled[i] = logits[i] == std::numeric_limits<double>::lowest() ? logits[i] : logits[i] / temperature;
  }
  kernels::softmax(scaled, probs);
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last_positive);
}

void apply_overrides(env::BoxAction& box, const Interventions& iv, Rng& rng) {
  switch (iv.center.mode) {
    case OverrideMode::learned:
      break;
    case OverrideMode::fixed:
      box.cx = iv.center.a;
      box.cy = iv.center.b;
      break;
    case OverrideMode::random:
      box.cx = rng.uniform(-1.0, 1.0);
      box.cy = rng.uniform(-1.0, 1.0);
      break;
  }
  switch (iv.size.mode) {
    case OverrideMode::learned:
      break;
    case OverrideMode::fixed:
      box.w = iv.size.a;
      box.h = iv.size.b;
      break;
    case OverrideMode::random:
      box.w = std::clamp(rng.uniform(env::kMinBoxSize, 1.0), env::kMinBoxSize, 1.0);
      box.h = std::clamp(rng.uniform(env::kMinBoxSize, 1.0), env::kMinBoxSize, 1.0);
      break;
  }
}

void Rollout::choose(const FovPolicy& policy, const DecodeConfig& cfg) {
  if (static_cast<int>(traj.tokens.size()) >= cfg.t_max) {
    traj.terminal = Terminal::length_cap;
    done = true;
    return;
  }
  const int n_fov = static_cast<int>(traj.fov_steps.size());
  const auto& iv = cfg.interventions;
  const bool masked = iv.mask_fov || n_fov >= cfg.k_max || (iv.fov_cap && n_fov >= *iv.fov_cap);
  std::vector<double> logits = std::move(last.logits);
  mask_structural(logits);
  if (masked) mask_fov(logits);

  const TokenId y = pick_token(logits, cfg.temperature, rng);
  std::vector<double> logp(logits.size());
  kernels::log_softmax(logits, logp);
  traj.tokens.push_back(TokenStep{y, logp[y], masked, mem.real_size()});

  if (y == tok::kEos) {
    traj.terminal = Terminal::eos;
    done = true;
    return;
  }
  pending.push_back(MemoryEntry::text_token(y));
  if (y != tok::kFovOpen) return;

  FovStep step;
  step.token_index = traj.tokens.size() - 1;
  step.h = last.state.h;
  step.sample = policy.forward(step.h, cfg.sample_boxes, &rng);
  apply_overrides(step.sample.box, iv, rng);
  step.block = env::crop_tokenize(episode->high_res, step.sample.box);
  const Array& p = step.block.patches;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    pending.push_back(MemoryEntry::visual_patch(std::span<const double>(p.raw() + i * p.cols(), p.cols())));
  }
  pending.push_back(MemoryEntry::text_token(tok::kFovClose));
  traj.fov_steps.push_back(std::move(step));
}

}  // namespace

Trajectory decode(const TransformerModel& model, const FovPolicy& policy, const env::Episode& episode,
                  const DecodeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rollout r(model, episode, seed);
  r.advance(model);
  while (true) {
    r.choose(policy, cfg);
    if (r.done) break;
    r.advance(model);
  }
  return r.finish();
}

std::vector<Trajectory> decode_batch(const TransformerModel& model, const FovPolicy& policy,
                                     const std::vector<env::Episode>& episodes, const DecodeConfig& cfg,
                                     std::uint64_t seed, std::vector<BatchStep>* log) {
  if (episodes.empty()) throw std::invalid_argument("decode_batch: no episodes");
  cfg.validate();
  std::vector<Rollout> batch;
  batch.reserve(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) batch.emplace_back(model, episodes[i], sample_seed(seed, i));

  bool first = true;
  while (true) {
    if (!first) {
      for (auto& r : batch)
        if (!r.done) r.choose(policy, cfg);
    }
    first = false;
    std::size_t l_max = 0;
    for (const auto& r : batch) l_max = std::max(l_max, r.pending.size());
    if (l_max == 0) break;
    // Equalize this step's block lengths by padding each history on the left.
    BatchStep step;
    for (auto& r : batch) {
      step.block.push_back(r.pending.size());
      step.pads.push_back(l_max - r.pending.size());
      r.mem.left_pad(l_max - r.pending.size());
      if (!r.pending.empty()) r.advance(model);
    }
    if (log) log->push_back(std::move(step));
  }
  std::vector<Trajectory> out;
  out.reserve(batch.size());
  for (auto& r : batch) out.push_back(r.finish());
  return out;
}

}  // namespace fovr

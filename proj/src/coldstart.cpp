// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/coldstart.hpp"

#include <stdexcept>
#include <string>

#include "fovr/decode.hpp"

namespace fovr {

std::string_view to_string(RationaleMode mode) {
  return mode == RationaleMode::interleaved ? "interleaved" : "fov_only";
}

RationaleMode parse_rationale_mode(std::string_view s) {
  if (s == "interleaved") return RationaleMode::interleaved;
  if (s == "fov_only") return RationaleMode::fov_only;
  throw std::invalid_argument("unknown rationale mode '" + std::string(s) + "'");
}

std::vector<TokenId> rationale_tokens(const env::Episode& episode, std::size_t s) {
  const env::BoxAction& b = episode.oracle_boxes.at(s);
  const env::PixelRect r = env::box_to_rect(b, episode.high_res.height, episode.high_res.width);
  const auto [row, col] = env::cell_of(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));
  return {tok::row(row), tok::col(col), episode.glyphs.at(s)};
}

TargetSequence build_target(const env::Episode& episode, RationaleMode mode, std::size_t patch) {
  TargetSequence t;
  t.mode = mode;
  t.entries = initial_observation(episode, patch);
  t.prompt_size = t.entries.size();
  t.lm_mask.assign(t.entries.size(), 0);

  auto text = [&](TokenId id, bool supervised) {
    t.entries.push_back(MemoryEntry::text_token(id));
    t.lm_mask.push_back(supervised ? 1 : 0);
  };
  text(tok::kThinkOpen, true);
  for (std::size_t s = 0; s < episode.oracle_boxes.size(); ++s) {
    t.fov_positions.push_back(t.entries.size());
    t.box_targets.push_back(episode.oracle_boxes[s]);
    text(tok::kFovOpen, true);
    const env::PatchBlock block = env::crop_tokenize(episode.high_res, episode.oracle_boxes[s], static_cast<int>(patch));
    const Array& p = block.patches;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      t.entries.push_back(MemoryEntry::visual_patch(std::span<const double>(p.raw() + i * p.cols(), p.cols())));
      t.lm_mask.push_back(0);
    }
    text(tok::kFovClose, false);
    if (mode == RationaleMode::interleaved) {
      for (TokenId id : rationale_tokens(episode, s)) text(id, true);
    }
  }
  text(tok::kThinkClose, true);
  text(tok::kAnsOpen, true);
  for (TokenId id : episode.answer) text(id, true);
  text(tok::kAnsClose, true);
  text(tok::kEos, true);
  t.entries = with_positions(std::move(t.entries));
  return t;
}

ColdstartNodes coldstart_loss(ParamBinder& model_bind, ParamBinder& fov_bind, const TransformerModel& model,
                              const FovPolicy& policy, const TargetSequence& target, const ColdstartConfig& cfg) {
  if (target.lm_mask.size() != target.entries.size() || target.fov_positions.size() != target.box_targets.size()) {
    throw std::invalid_argument("coldstart_loss: inconsistent target");
  }
  Graph& g = model_bind.graph();
  const SequenceNodes seq = model.forward_graph(model_bind, target.entries);

  std::vector<Graph::LogProbRequest> requests;
  for (std::size_t t = 0; t < target.entries.size(); ++t) {
    if (!target.lm_mask[t]) continue;
    if (t == 0) throw std::invalid_argument("coldstart_loss: the first entry cannot be supervised");
    requests.push_back({t - 1, target.entries[t].token, masked_columns(false)});
  }
  const NodeId lm = requests.empty() ? g.constant(Array::scalar(0.0))
                                     : g.scale(g.sum(g.token_log_probs(seq.logits, std::move(requests))), -1.0);

  NodeId box = g.constant(Array::scalar(0.0));
  for (std::size_t s = 0; s < target.fov_positions.size(); ++s) {
    const std::size_t t = target.fov_positions[s];
    const NodeId h = g.row(seq.split_hidden, t - 1);
    const NodeId mean = policy.mean_box_graph(fov_bind, h);
    const Box4 b = to_array(target.box_targets[s]);
    const NodeId l1 = g.sum(g.abs(g.sub(mean, g.constant(Array::vector({b.begin(), b.end()})))));
    box = g.add(box, l1);
  }
  box = g.scale(box, cfg.lambda_box);
  return {g.add(lm, box), lm, box};
}

ColdstartParts coldstart_loss_value(const TransformerModel& model, const FovPolicy& policy,
                                    const TargetSequence& target, const ColdstartConfig& cfg) {
  Graph g;
  ParamBinder mb(g, model.params());
  ParamBinder fb(g, policy.params());
  const ColdstartNodes n = coldstart_loss(mb, fb, model, policy, target, cfg);
  return {g.value(n.total).item(), g.value(n.lm).item(), g.value(n.box).item()};
}

}  // namespace fovr

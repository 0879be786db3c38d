// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Teacher-forcing targets built from oracle boxes, and the supervised
// token + box regression loss over them.

#include <cstdint>
#include <string_view>
#include <vector>

#include "fovr/env.hpp"
#include "fovr/fov_policy.hpp"
#include "fovr/model.hpp"

namespace fovr {

enum class RationaleMode : std::uint8_t { interleaved = 0, fov_only = 1 };

std::string_view to_string(RationaleMode mode);
RationaleMode parse_rationale_mode(std::string_view s);

struct TargetSequence {
  std::vector<MemoryEntry> entries;       // position ids 0..n-1
  std::vector<std::uint8_t> lm_mask;      // 1 where cross-entropy applies
  std::vector<std::size_t> fov_positions;  // indices of <fov> entries
  std::vector<env::BoxAction> box_targets;
  RationaleMode mode = RationaleMode::interleaved;
  std::size_t prompt_size = 0;

  friend bool operator==(const TargetSequence&, const TargetSequence&) = default;
};

/// Templated rationale for segment s: the cell row, cell column and glyph
/// class seen under the oracle box.
std::vector<TokenId> rationale_tokens(const env::Episode& episode, std::size_t s);

TargetSequence build_target(const env::Episode& episode, RationaleMode mode, std::size_t patch = env::kPatch);

struct ColdstartConfig {
  double lambda_box = 1.0;
};

struct ColdstartNodes {
  NodeId total;
  NodeId lm;
  NodeId box;
};

/// Builds the loss for one target on the graph shared by both binders.
ColdstartNodes coldstart_loss(ParamBinder& model_bind, ParamBinder& fov_bind, const TransformerModel& model,
                              const FovPolicy& policy, const TargetSequence& target, const ColdstartConfig& cfg);

struct ColdstartParts {
  double total = 0.0;
  double lm = 0.0;
  double box = 0.0;
};

/// Value-only evaluation.
ColdstartParts coldstart_loss_value(const TransformerModel& model, const FovPolicy& policy,
                                    const TargetSequence& target, const ColdstartConfig& cfg);

}  // namespace fovr

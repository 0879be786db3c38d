// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Training and evaluation loops shared by the CLI, the acceptance suite and
// the Python bindings.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fovr/coldstart.hpp"
#include "fovr/config.hpp"
#include "fovr/decode.hpp"
#include "fovr/fov_policy.hpp"
#include "fovr/grpo.hpp"
#include "fovr/model.hpp"
#include "fovr/report.hpp"

namespace fovr {

/// Raised when a loss turns non-finite. Parameters are rolled back to the
/// values before the failing step.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Episodes e_0..e_{count-1}; each kind is identify with probability
/// `identify_fraction`, drawn from a stream seeded by `seed`.
std::vector<env::Episode> make_split(int count, std::uint64_t seed, double identify_fraction,
                                     const env::EnvConfig& cfg = {});

using StepCallback = std::function<void(const MetricsRow&)>;

struct ColdstartSummary {
  int steps = 0;
  double first_loss = 0.0;  // mean per-sample loss of the first minibatch
  double last_loss = 0.0;
};

ColdstartSummary train_coldstart(TransformerModel& model, FovPolicy& policy, const std::vector<TargetSequence>& targets,
                                 const ColdstartRunConfig& cfg, std::uint64_t seed, const StepCallback& on_step = {});

struct RlSummary {
  int steps = 0;
  double acc_mean = 0.0;  // mean r_acc over all rollouts
  double rho_tail = 0.0;  // mean rho over the last quarter of steps
};

/// One update per rollout group (repeated `epochs_per_group` times); group s
/// uses episode s mod |episodes| and seeds its members with sample_seed.
RlSummary train_rl(TransformerModel& model, FovPolicy& policy, const TransformerModel& ref_model,
                   const std::vector<env::Episode>& episodes, const RlRunConfig& cfg, const DecodeConfig& rollout,
                   std::uint64_t seed, const StepCallback& on_step = {});

EvalReport evaluate(const TransformerModel& model, const FovPolicy& policy, const std::vector<env::Episode>& episodes,
                    const DecodeConfig& cfg, std::uint64_t seed);

std::string describe(const Interventions& iv);

}  // namespace fovr

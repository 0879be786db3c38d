// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Continuous box policy over the agent state: a two-layer ReLU MLP predicts
// the mean box, and exploration adds isotropic Gaussian noise with a fixed
// standard deviation. Densities are evaluated on the pre-clamp draw.

#include <array>
#include <cstdint>

#include "fovr/array.hpp"
#include "fovr/autograd.hpp"
#include "fovr/env.hpp"
#include "fovr/params.hpp"

namespace fovr {

class Rng;

struct FovPolicyConfig {
  std::size_t hidden_in = 64;
  std::size_t hidden_mid = 32;
  double sigma = 0.1;
  double min_size = env::kMinBoxSize;
  double max_size = 1.0;

  void validate() const;
  friend bool operator==(const FovPolicyConfig&, const FovPolicyConfig&) = default;
};

using Box4 = std::array<double, 4>;

Box4 to_array(const env::BoxAction& b);
env::BoxAction to_box(const Box4& v);

struct FovSample {
  env::BoxAction box;       // executed action, clamped to the valid range
  double log_prob = 0.0;    // density of `raw` under N(mean_box, sigma^2 I)
  env::BoxAction mean_box;  // deterministic prediction
  Box4 raw{};               // pre-clamp draw (equals mean_box when not sampling)
  Box4 noise{};             // standard-normal draws used for `raw`
};

/// Sum of four independent Normal(mean_i, sigma) log-densities.
double gaussian_log_density(const Box4& x, const Box4& mean, double sigma);

class FovPolicy {
 public:
  FovPolicy(const FovPolicyConfig& cfg, std::uint64_t seed);
  FovPolicy(const FovPolicyConfig& cfg, ParameterStore params);

  const FovPolicyConfig& config() const { return cfg_; }
  const ParameterStore& params() const { return params_; }
  ParameterStore& params() { return params_; }

  env::BoxAction mean_box(const Array& h) const;

  /// With `sample` set, `rng` must be non-null.
  FovSample forward(const Array& h, bool sample, Rng* rng) const;

  /// Log-density of `box` (any 4-vector) and the mean box it was scored against.
  std::pair<double, env::BoxAction> get_log_prob(const Array& h, const Box4& box) const;

  // Differentiable variants; `h` is a rank-1 node of extent hidden_in.
  NodeId mean_box_graph(ParamBinder& bind, NodeId h) const;
  NodeId log_prob_graph(ParamBinder& bind, NodeId h, const Box4& box) const;
  // clamp(mean + sigma * noise) per component, the executed box of a
  // reparameterized draw.
  NodeId sampled_box_graph(ParamBinder& bind, NodeId h, const Box4& noise) const;

  struct Layout {
    std::size_t w1, c1, w2, c2;
  };
  const Layout& layout() const { return layout_; }

 private:
  void bind_layout();
  NodeId clamp_box(Graph& g, NodeId center, NodeId size) const;

  FovPolicyConfig cfg_;
  ParameterStore params_;
  Layout layout_{};
};

}  // namespace fovr

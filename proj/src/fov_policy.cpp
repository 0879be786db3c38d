// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/fov_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fovr/rng.hpp"

namespace fovr {

void FovPolicyConfig::validate() const {
  if (hidden_in == 0 || hidden_mid == 0) throw std::invalid_argument("FovPolicyConfig: empty layer");
  if (!(sigma > 0.0)) throw std::invalid_argument("FovPolicyConfig: sigma must be positive");
  if (!(min_size > 0.0 && min_size < max_size && max_size <= 1.0)) {
    throw std::invalid_argument("FovPolicyConfig: need 0 < min_size < max_size <= 1");
  }
}

Box4 to_array(const env::BoxAction& b) { return {b.cx, b.cy, b.w, b.h}; }
env::BoxAction to_box(const Box4& v) { return {v[0], v[1], v[2], v[3]}; }

namespace {

double log_norm_const(double sigma) { return -std::log(sigma * std::sqrt(2.0 * std::numbers::pi)); }

}  // namespace

double gaussian_log_density(const Box4& x, const Box4& mean, double sigma) {
  double s = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double diff = x[i] - mean[i];
    s += diff * diff;
  }
  return (-0.5 / (sigma * sigma)) * s + 4.0 * log_norm_const(sigma);
}

FovPolicy::FovPolicy(const FovPolicyConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden_in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(cfg_.hidden_mid));
  params_.add("fov.w1", ParameterStore::gaussian({cfg_.hidden_in, cfg_.hidden_mid}, s1, rng));
  params_.add("fov.c1", Array(Shape{cfg_.hidden_mid}));
  params_.add("fov.w2", ParameterStore::gaussian({cfg_.hidden_mid, 4}, 0.1 * s2, rng));
  params_.add("fov.c2", Array(Shape{4}));
  bind_layout();
}

FovPolicy::FovPolicy(const FovPolicyConfig& cfg, ParameterStore params) : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  bind_layout();
}

void FovPolicy::bind_layout() {
  auto idx = [&](const char* name, Shape shape) {
    const auto i = params_.find(name);
    if (!i) throw std::invalid_argument(std::string("fov policy parameter missing: ") + name);
    if (params_[*i].value.shape() != shape) throw ShapeError(std::string("fov policy parameter shape: ") + name);
    return *i;
  };
  layout_.w1 = idx("fov.w1", {cfg_.hidden_in, cfg_.hidden_mid});
  layout_.c1 = idx("fov.c1", {cfg_.hidden_mid});
  layout_.w2 = idx("fov.w2", {cfg_.hidden_mid, 4});
  layout_.c2 = idx("fov.c2", {4});
}

NodeId FovPolicy::clamp_box(Graph& g, NodeId center, NodeId size) const {
  return g.concat(g.clamp(center, -1.0, 1.0), g.clamp(size, cfg_.min_size, cfg_.max_size));
}

NodeId FovPolicy::mean_box_graph(ParamBinder& bind, NodeId h) const {
  Graph& g = bind.graph();
  if (g.value(h).rank() != 1 || g.value(h).size() != cfg_.hidden_in) {
    throw ShapeError("FovPolicy: agent state has shape " + shape_string(g.value(h).shape()));
  }
  const NodeId mid = g.relu(g.affine(h, bind(layout_.w1), bind(layout_.c1)));
  const NodeId out = g.affine(mid, bind(layout_.w2), bind(layout_.c2));
  const NodeId center = g.tanh(g.slice_cols(out, 0, 2));
  const NodeId size = g.clamp(g.sigmoid(g.slice_cols(out, 2, 4)), cfg_.min_size, cfg_.max_size);
  return g.concat(center, size);
}

NodeId FovPolicy::log_prob_graph(ParamBinder& bind, NodeId h, const Box4& box) const {
  Graph& g = bind.graph();
  const NodeId mean = mean_box_graph(bind, h);
  const NodeId diff = g.sub(g.constant(Array::vector({box.begin(), box.end()})), mean);
  const NodeId quad = g.scale(g.sum(g.square(diff)), -0.5 / (cfg_.sigma * cfg_.sigma));
  return g.add_scalar(quad, 4.0 * log_norm_const(cfg_.sigma));
}

NodeId FovPolicy::sampled_box_graph(ParamBinder& bind, NodeId h, const Box4& noise) const {
  Graph& g = bind.graph();
  const NodeId mean = mean_box_graph(bind, h);
  Box4 offset{};
  for (std::size_t i = 0; i < 4; ++i) offset[i] = cfg_.sigma * noise[i];
  const NodeId raw = g.add(mean, g.constant(Array::vector({offset.begin(), offset.end()})));
  return clamp_box(g, g.slice_cols(raw, 0, 2), g.slice_cols(raw, 2, 4));
}

env::BoxAction FovPolicy::mean_box(const Array& h) const {
  Graph g;
  ParamBinder bind(g, params_);
  const Array& v = g.value(mean_box_graph(bind, g.constant(h)));
  return {v[0], v[1], v[2], v[3]};
}

FovSample FovPolicy::forward(const Array& h, bool sample, Rng* rng) const {
  FovSample s;
  s.mean_box = mean_box(h);
  const Box4 mean = to_array(s.mean_box);
  if (!sample) {
    s.box = s.mean_box;
    s.raw = mean;
    return s;
  }
  if (rng == nullptr) throw std::invalid_argument("FovPolicy::forward: sampling requires an rng");
  for (std::size_t i = 0; i < 4; ++i) {
    s.noise[i] = rng->normal();
    s.raw[i] = mean[i] + cfg_.sigma * s.noise[i];
  }
  s.log_prob = gaussian_log_density(s.raw, mean, cfg_.sigma);
  s.box = {std::clamp(s.raw[0], -1.0, 1.0), std::clamp(s.raw[1], -1.0, 1.0),
           std::clamp(s.raw[2], cfg_.min_size, cfg_.max_size), std::clamp(s.raw[3], cfg_.min_size, cfg_.max_size)};
  return s;
}

std::pair<double, env::BoxAction> FovPolicy::get_log_prob(const Array& h, const Box4& box) const {
  const env::BoxAction m = mean_box(h);
  return {gaussian_log_density(box, to_array(m), cfg_.sigma), m};
}

}  // namespace fovr

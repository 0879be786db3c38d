// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "fovr/array.hpp"
#include "fovr/autograd.hpp"
#include "fovr/finite_diff.hpp"
#include "fovr/fov_policy.hpp"
#include "fovr/model.hpp"
#include "fovr/params.hpp"
#include "fovr/rng.hpp"

namespace fovr::testing {

inline Array random_array(Shape shape, Rng& rng, double scale = 1.0) {
  Array a(std::move(shape));
  for (double& v : a.data()) v = scale * rng.uniform(-1.0, 1.0);
  return a;
}

using LeafLoss = std::function<NodeId(Graph&, const std::vector<NodeId>&)>;

/// Largest relative error between backward() and central differences over
/// every coordinate of every input.
inline double max_grad_error(const LeafLoss& build, const std::vector<Array>& inputs, double eps = 1e-5) {
  Graph g;
  std::vector<NodeId> leaves;
  for (const auto& a : inputs) leaves.push_back(g.parameter(a));
  g.backward(build(g, leaves));
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Array analytic = g.grad(leaves[k]);
    auto f = [&](const Array& probe) {
      Graph h;
      std::vector<NodeId> ls;
      for (std::size_t j = 0; j < inputs.size(); ++j) ls.push_back(h.parameter(j == k ? probe : inputs[j]));
      return h.value(build(h, ls)).item();
    };
    const Array numeric = finite_diff_grad(f, inputs[k], eps);
    for (std::size_t i = 0; i < numeric.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  }
  return worst;
}

/// d=8, two-layer fixture with a wider init so every path carries signal.
inline ModelConfig tiny_model_config() {
  ModelConfig c;
  c.d = 8;
  c.n_layers = 2;
  c.split = 1;
  c.n_heads = 2;
  c.max_pos = 160;
  c.init_std = 0.3;
  return c;
}

inline FovPolicyConfig tiny_fov_config() {
  FovPolicyConfig c;
  c.hidden_in = 8;
  c.hidden_mid = 4;
  return c;
}

/// Loss over both parameter stores, built on a shared graph.
using StoreLoss = std::function<NodeId(ParamBinder& model_bind, ParamBinder& fov_bind)>;

struct CoordCheck {
  std::size_t checked = 0;
  double worst = 0.0;
};

/// Compares backward() against central differences on randomly chosen
/// coordinates of each parameter store (all coordinates when the budget is
/// larger than the store).
inline CoordCheck check_store_gradients(TransformerModel& model, FovPolicy& policy, const StoreLoss& loss,
                                        std::size_t model_budget, std::size_t fov_budget, std::uint64_t seed,
                                        double eps = 1e-5) {
  GradStore mg(model.params()), fg(policy.params());
  {
    Graph g;
    ParamBinder mb(g, model.params());
    ParamBinder fb(g, policy.params());
    g.backward(loss(mb, fb));
    mb.accumulate(mg);
    fb.accumulate(fg);
  }
  auto value = [&]() {
    Graph g;
    ParamBinder mb(g, model.params());
    ParamBinder fb(g, policy.params());
    return g.value(loss(mb, fb)).item();
  };
  Rng rng(seed);
  CoordCheck out;
  auto sweep = [&](ParameterStore& store, const GradStore& grads, std::size_t budget) {
    std::vector<std::pair<std::size_t, std::size_t>> coords;
    for (std::size_t p = 0; p < store.size(); ++p)
      for (std::size_t i = 0; i < store[p].value.size(); ++i) coords.emplace_back(p, i);
    for (std::size_t i = coords.size(); i > 1; --i) std::swap(coords[i - 1], coords[rng.below(i)]);
    coords.resize(std::min(budget, coords.size()));
    for (const auto& [p, i] : coords) {
      double& w = store[p].value[i];
      const double orig = w;
      w = orig + eps;
      const double up = value();
      w = orig - eps;
      const double down = value();
      w = orig;
      const double numeric = (up - down) / (2.0 * eps);
      out.worst = std::max(out.worst, relative_error(grads[p][i], numeric));
      ++out.checked;
    }
  };
  sweep(model.params(), mg, model_budget);
  sweep(policy.params(), fg, fov_budget);
  return out;
}

}  // namespace fovr::testing

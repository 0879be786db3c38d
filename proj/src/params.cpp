// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/params.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fovr/rng.hpp"

namespace fovr {

std::size_t ParameterStore::add(std::string name, Array init) {
  if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  params_.push_back(Parameter{std::move(name), std::move(init)});
  return params_.size() - 1;
}

std::optional<std::size_t> ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterStore::total_elements() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Array ParameterStore::gaussian(Shape shape, double std, Rng& rng) {
  Array a(std::move(shape));
  for (double& v : a.data()) v = std * rng.normal();
  return a;
}

GradStore::GradStore(const ParameterStore& store) {
  grads_.reserve(store.size());
  for (const auto& p : store) grads_.emplace_back(p.value.shape());
}

void GradStore::zero() {
  for (auto& g : grads_) std::fill(g.data().begin(), g.data().end(), 0.0);
}

void GradStore::scale(double c) {
  for (auto& g : grads_)
    for (double& v : g.data()) v *= c;
}

void GradStore::add(const GradStore& other) {
  if (other.size() != size()) throw ShapeError("GradStore::add: size mismatch");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    for (std::size_t j = 0; j < grads_[i].size(); ++j) grads_[i][j] += other.grads_[i][j];
  }
}

double GradStore::max_abs() const {
  double m = 0.0;
  for (const auto& g : grads_)
    for (double v : g.data()) m = std::max(m, std::fabs(v));
  return m;
}

ParamBinder::ParamBinder(Graph& graph, const ParameterStore& store)
    : graph_(graph), store_(store), bound_(store.size()) {}

NodeId ParamBinder::operator()(std::size_t index) {
  auto& slot = bound_.at(index);
  if (!slot) slot = graph_.parameter(store_[index].value);
  return *slot;
}

void ParamBinder::accumulate(GradStore& into) const {
  for (std::size_t i = 0; i < bound_.size(); ++i) {
    if (!bound_[i]) continue;
    const Array g = graph_.grad(*bound_[i]);
    Array& dst = into[i];
    for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
  }
}

Adam::Adam(const ParameterStore& store, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& p : store) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void Adam::step(ParameterStore& store, const GradStore& grads) {
  if (grads.size() != store.size() || m_.size() != store.size()) throw ShapeError("Adam::step: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < store.size(); ++i) {
    Array& w = store[i].value;
    const Array& g = grads[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
      v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double mhat = m_[i][j] / c1;
      const double vhat = v_[i][j] / c2;
      w[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace fovr

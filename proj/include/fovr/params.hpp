// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fovr/array.hpp"
#include "fovr/autograd.hpp"

namespace fovr {

class Rng;

struct Parameter {
  std::string name;
  Array value;
};

/// Ordered, named collection of trainable arrays.
class ParameterStore {
 public:
  std::size_t add(std::string name, Array init);
  std::size_t size() const { return params_.size(); }
  const Parameter& operator[](std::size_t i) const { return params_.at(i); }
  Parameter& operator[](std::size_t i) { return params_.at(i); }
  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t total_elements() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  // Gaussian(0, std) fill used for weight matrices and embedding tables.
  static Array gaussian(Shape shape, double std, Rng& rng);

 private:
  std::vector<Parameter> params_;
};

/// Gradient buffers aligned index-for-index with a ParameterStore.
class GradStore {
 public:
  GradStore() = default;
  explicit GradStore(const ParameterStore& store);
  std::size_t size() const { return grads_.size(); }
  Array& operator[](std::size_t i) { return grads_.at(i); }
  const Array& operator[](std::size_t i) const { return grads_.at(i); }
  void zero();
  void scale(double c);
  void add(const GradStore& other);
  double max_abs() const;

 private:
  std::vector<Array> grads_;
};

/// Lazily binds store parameters to graph leaves and collects their gradients.
class ParamBinder {
 public:
  ParamBinder(Graph& graph, const ParameterStore& store);
  NodeId operator()(std::size_t index);
  Graph& graph() { return graph_; }
  // Adds d(loss)/d(param) for every bound parameter into `into`.
  void accumulate(GradStore& into) const;

 private:
  Graph& graph_;
  const ParameterStore& store_;
  std::vector<std::optional<NodeId>> bound_;
};

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(const ParameterStore& store, AdamConfig cfg);
  void step(ParameterStore& store, const GradStore& grads);
  void set_lr(double lr) { cfg_.lr = lr; }
  std::size_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<Array> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace fovr

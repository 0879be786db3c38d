// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Tape-based reverse-mode differentiation over dense arrays. Nodes are
// appended in creation order, which is a topological order by construction,
// so backward is a single reverse sweep over the tape.

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "fovr/array.hpp"

namespace fovr {

struct NodeId {
  std::uint32_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaves. Constants never receive gradients; parameters always do.
  NodeId constant(Array value);
  NodeId parameter(Array value);

  const Array& value(NodeId id) const { return nodes_.at(id.index).value; }
  // Gradient of the last backward() loss; zeros for unreachable nodes.
  Array grad(NodeId id) const;
  bool requires_grad(NodeId id) const { return nodes_.at(id.index).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape. `loss` must be a scalar.
  void backward(NodeId loss);

  // --- linear algebra -----------------------------------------------------
  NodeId matmul(NodeId a, NodeId b);                 // [m,k]x[k,n]
  NodeId affine(NodeId x, NodeId w, NodeId b);       // x*w + b, bias along last axis
  NodeId add_bias(NodeId x, NodeId bias);

  // --- elementwise --------------------------------------------------------
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId add_scalar(NodeId a, double c);
  NodeId square(NodeId a);
  NodeId abs(NodeId a);
  NodeId exp(NodeId a);
  NodeId log(NodeId a);
  NodeId relu(NodeId a);
  NodeId gelu(NodeId a);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  // Gradient passes only strictly inside (lo, hi).
  NodeId clamp(NodeId a, double lo, double hi);
  // Elementwise minimum; ties route the gradient to `a`.
  NodeId minimum(NodeId a, NodeId b);

  // --- reductions ---------------------------------------------------------
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);

  // --- structure ----------------------------------------------------------
  NodeId slice_cols(NodeId x, std::size_t begin, std::size_t end);
  NodeId concat(NodeId a, NodeId b);  // along the last axis, rank 1 only
  NodeId row(NodeId x, std::size_t r); // [n,d] -> [d]
  NodeId pick(NodeId x, std::vector<std::size_t> flat_indices);  // -> [k]
  NodeId gather_rows(NodeId table, std::vector<std::size_t> rows);
  // Builds [k, d] from (source, row) pairs; all sources share the width d.
  NodeId select_rows(std::vector<NodeId> sources, std::vector<std::pair<std::size_t, std::size_t>> picks);

  // --- transformer pieces -------------------------------------------------
  NodeId layer_norm(NodeId x, NodeId gain, NodeId bias);
  // Causal multi-head attention over rows of q, k, v ([n,d] each).
  NodeId causal_attention(NodeId q, NodeId k, NodeId v, std::size_t n_heads);

  // --- likelihoods --------------------------------------------------------
  // -log softmax(logits)[target] for a rank-1 logits vector.
  NodeId softmax_cross_entropy(NodeId logits, std::size_t target);
  // Log-probabilities log softmax(logits[row])[target] for each request.
  // Masked columns are forced to the lowest finite value before
  // normalization.
  struct LogProbRequest {
    std::size_t row = 0;
    std::size_t target = 0;
    std::vector<std::size_t> masked_columns;
  };
  NodeId token_log_probs(NodeId logits, std::vector<LogProbRequest> requests);

 private:
  using Backward = std::function<void(Graph&, const Array& grad_out)>;
  struct Node {
    Array value;
    bool requires_grad = false;
    Backward backward;
  };

  NodeId push(Array value, bool requires_grad, Backward backward);
  bool any_grad(std::initializer_list<NodeId> ids) const;
  // Gradient buffer for accumulation, allocated as zeros on first use.
  Array& grad_buffer(NodeId id);
  const Node& node(NodeId id) const { return nodes_.at(id.index); }
  template <class Fwd, class Dfdx>
  NodeId unary(NodeId a, Fwd fwd, Dfdx dfdx);

  std::vector<Node> nodes_;
  std::vector<std::optional<Array>> grads_;
};

}  // namespace fovr

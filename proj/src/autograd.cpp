// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fovr/kernels.hpp"

namespace fovr {

namespace {

std::size_t last_extent(const Array& a) { return a.rank() == 0 ? 1 : a.shape().back(); }

}  // namespace

NodeId Graph::push(Array value, bool requires_grad, Backward backward) {
#ifndef NDEBUG
  value.check_finite("Graph node");
#endif
  nodes_.push_back(Node{std::move(value), requires_grad, requires_grad ? std::move(backward) : Backward{}});
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

bool Graph::any_grad(std::initializer_list<NodeId> ids) const {
  return std::any_of(ids.begin(), ids.end(), [this](NodeId id) { return node(id).requires_grad; });
}

NodeId Graph::constant(Array value) { return push(std::move(value), false, {}); }

NodeId Graph::parameter(Array value) { return push(std::move(value), true, {}); }

Array Graph::grad(NodeId id) const {
  if (id.index < grads_.size() && grads_[id.index].has_value()) return *grads_[id.index];
  return Array(node(id).value.shape());
}

Array& Graph::grad_buffer(NodeId id) {
  auto& slot = grads_.at(id.index);
  if (!slot.has_value()) slot.emplace(node(id).value.shape());
  return *slot;
}

void Graph::backward(NodeId loss) {
  if (node(loss).value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + shape_string(node(loss).value.shape()));
  }
  grads_.assign(nodes_.size(), std::nullopt);
  grad_buffer(loss)[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || !grads_[i].has_value()) continue;
    const Array go = *grads_[i];
    n.backward(*this, go);
  }
}

// ---------------------------------------------------------------------------
// linear algebra

NodeId Graph::matmul(NodeId a, NodeId b) {
  const Array& av = value(a);
  const Array& bv = value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.extent(1) != bv.extent(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  const std::size_t m = av.extent(0), k = av.extent(1), n = bv.extent(1);
  Array out(Shape{m, n});
  kernels::affine(av.raw(), m, k, bv.raw(), nullptr, n, out.raw());
  return push(std::move(out), any_grad({a, b}), [a, b, m, k, n](Graph& g, const Array& go) {
    const Array& av = g.value(a);
    const Array& bv = g.value(b);
    if (g.requires_grad(a)) {
      Array& da = g.grad_buffer(a);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += go[i * n + j] * bv[kk * n + j];
          da[i * k + kk] += s;
        }
    }
    if (g.requires_grad(b)) {
      Array& db = g.grad_buffer(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double x = av[i * k + kk];
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) db[kk * n + j] += x * go[i * n + j];
        }
    }
  });
}

NodeId Graph::affine(NodeId x, NodeId w, NodeId b) {
  const Array& xv = value(x);
  const Array& wv = value(w);
  const Array& bv = value(b);
  if (xv.rank() < 1 || xv.rank() > 2 || wv.rank() != 2 || last_extent(xv) != wv.extent(0) ||
      bv.rank() != 1 || bv.extent(0) != wv.extent(1)) {
    throw ShapeError("affine: incompatible shapes " + shape_string(xv.shape()) + " x " + shape_string(wv.shape()) +
                     " + " + shape_string(bv.shape()));
  }
  const std::size_t n = xv.rows(), k = wv.extent(0), m = wv.extent(1);
  Array out(xv.rank() == 1 ? Shape{m} : Shape{n, m});
  kernels::affine(xv.raw(), n, k, wv.raw(), bv.raw(), m, out.raw());
  return push(std::move(out), any_grad({x, w, b}), [x, w, b, n, k, m](Graph& g, const Array& go) {
    const Array& xv = g.value(x);
    const Array& wv = g.value(w);
    if (g.requires_grad(x)) {
      Array& dx = g.grad_buffer(x);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
          double s = 0.0;
          const double* wr = wv.raw() + kk * m;
          const double* gr = go.raw() + i * m;
          for (std::size_t j = 0; j < m; ++j) s += gr[j] * wr[j];
          dx[i * k + kk] += s;
        }
    }
    if (g.requires_grad(w)) {
      Array& dw = g.grad_buffer(w);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t kk = 0; kk < k; ++kk) {
          const double xval = xv[i * k + kk];
          if (xval == 0.0) continue;
          double* dr = dw.raw() + kk * m;
          const double* gr = go.raw() + i * m;
          for (std::size_t j = 0; j < m; ++j) dr[j] += xval * gr[j];
        }
    }
    if (g.requires_grad(b)) {
      Array& db = g.grad_buffer(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) db[j] += go[i * m + j];
    }
  });
}

NodeId Graph::add_bias(NodeId x, NodeId bias) {
  const Array& xv = value(x);
  const Array& bv = value(bias);
  if (bv.rank() != 1 || bv.extent(0) != last_extent(xv)) {
    throw ShapeError("add_bias: bias " + shape_string(bv.shape()) + " vs " + shape_string(xv.shape()));
  }
  const std::size_t c = bv.size();
  Array out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % c];
  return push(std::move(out), any_grad({x, bias}), [x, bias, c](Graph& g, const Array& go) {
    if (g.requires_grad(x)) {
      Array& dx = g.grad_buffer(x);
      for (std::size_t i = 0; i < go.size(); ++i) dx[i] += go[i];
    }
    if (g.requires_grad(bias)) {
      Array& db = g.grad_buffer(bias);
      for (std::size_t i = 0; i < go.size(); ++i) db[i % c] += go[i];
    }
  });
}

// ---------------------------------------------------------------------------
// elementwise

NodeId Graph::add(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "add");
  Array out = value(a);
  const Array& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(std::move(out), any_grad({a, b}), [a, b](Graph& g, const Array& go) {
    for (NodeId t : {a, b}) {
      if (!g.requires_grad(t)) continue;
      Array& d = g.grad_buffer(t);
      for (std::size_t i = 0; i < go.size(); ++i) d[i] += go[i];
    }
  });
}

NodeId Graph::sub(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "sub");
  Array out = value(a);
  const Array& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return push(std::move(out), any_grad({a, b}), [a, b](Graph& g, const Array& go) {
    if (g.requires_grad(a)) {
      Array& d = g.grad_buffer(a);
      for (std::size_t i = 0; i < go.size(); ++i) d[i] += go[i];
    }
    if (g.requires_grad(b)) {
      Array& d = g.grad_buffer(b);
      for (std::size_t i = 0; i < go.size(); ++i) d[i] -= go[i];
    }
  });
}

NodeId Graph::mul(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "mul");
  Array out = value(a);
  const Array& bv = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return push(std::move(out), any_grad({a, b}), [a, b](Graph& g, const Array& go) {
    const Array& av = g.value(a);
    const Array& bv = g.value(b);
    if (g.requires_grad(a)) {
      Array& d = g.grad_buffer(a);
      for (std::size_t i = 0; i < go.size(); ++i) d[i] += go[i] * bv[i];
    }
    if (g.requires_grad(b)) {
      Array& d = g.grad_buffer(b);
      for (std::size_t i = 0; i < go.size(); ++i) d[i] += go[i] * av[i];
    }
  });
}

template <class Fwd, class Dfdx>
NodeId Graph::unary(NodeId a, Fwd fwd, Dfdx dfdx) {
  Array out = value(a);
  for (double& v : out.data()) v = fwd(v);
  return push(std::move(out), any_grad({a}), [a, dfdx](Graph& g, const Array& go) {
    const Array& av = g.value(a);
    Array& d = g.grad_buffer(a);
    for (std::size_t i = 0; i < go.size(); ++i) d[i] += go[i] * dfdx(av[i]);
  });
}

NodeId Graph::scale(NodeId a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double) { return c; });
}

NodeId Graph::add_scalar(NodeId a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double) { return 1.0; });
}

NodeId Graph::square(NodeId a) {
  return unary(a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

NodeId Graph::abs(NodeId a) {
  return unary(a, [](double x) { return std::fabs(x); },
               [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

NodeId Graph::exp(NodeId a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

NodeId Graph::log(NodeId a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

NodeId Graph::relu(NodeId a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

NodeId Graph::gelu(NodeId a) {
  return unary(a, [](double x) { return kernels::gelu(x); }, [](double x) { return kernels::gelu_grad(x); });
}

NodeId Graph::tanh(NodeId a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double x) {
                 const double t = std::tanh(x);
                 return 1.0 - t * t;
               });
}

namespace {
double sigmoid_value(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

NodeId Graph::sigmoid(NodeId a) {
  return unary(a, sigmoid_value, [](double x) {
    const double s = sigmoid_value(x);
    return s * (1.0 - s);
  });
}

NodeId Graph::clamp(NodeId a, double lo, double hi) {
  return unary(a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

NodeId Graph::minimum(NodeId a, NodeId b) {
  require_same_shape(value(a), value(b), "minimum");
  const Array& av = value(a);
  const Array& bv = value(b);
  Array out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(av[i], bv[i]);
  return push(std::move(out), any_grad({a, b}), [a, b](Graph& g, const Array& go) {
    const Array& av = g.value(a);
    const Array& bv = g.value(b);
    for (std::size_t i = 0; i < go.size(); ++i) {
      const NodeId t = av[i] <= bv[i] ? a : b;
      if (g.requires_grad(t)) g.grad_buffer(t)[i] += go[i];
    }
  });
}

// ---------------------------------------------------------------------------
// reductions

NodeId Graph::sum(NodeId a) {
  double s = 0.0;
  for (double v : value(a).data()) s += v;
  return push(Array::scalar(s), any_grad({a}), [a](Graph& g, const Array& go) {
    Array& d = g.grad_buffer(a);
    for (double& v : d.data()) v += go[0];
  });
}

NodeId Graph::mean(NodeId a) {
  const double n = static_cast<double>(value(a).size());
  double s = 0.0;
  for (double v : value(a).data()) s += v;
  return push(Array::scalar(s / n), any_grad({a}), [a, n](Graph& g, const Array& go) {
    Array& d = g.grad_buffer(a);
    for (double& v : d.data()) v += go[0] / n;
  });
}

// ---------------------------------------------------------------------------
// structure

NodeId Graph::slice_cols(NodeId x, std::size_t begin, std::size_t end) {
  const Array& xv = value(x);
  const std::size_t c = last_extent(xv);
  if (xv.rank() < 1 || xv.rank() > 2 || begin >= end || end > c) {
    throw ShapeError("slice_cols: bad range for shape " + shape_string(xv.shape()));
  }
  const std::size_t n = xv.rows(), w = end - begin;
  Array out(xv.rank() == 1 ? Shape{w} : Shape{n, w});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = xv[i * c + begin + j];
  return push(std::move(out), any_grad({x}), [x, begin, c, n, w](Graph& g, const Array& go) {
    Array& d = g.grad_buffer(x);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) d[i * c + begin + j] += go[i * w + j];
  });
}

NodeId Graph::concat(NodeId a, NodeId b) {
  const Array& av = value(a);
  const Array& bv = value(b);
  if (av.rank() != 1 || bv.rank() != 1) throw ShapeError("concat: rank-1 inputs required");
  std::vector<double> v(av.data().begin(), av.data().end());
  v.insert(v.end(), bv.data().begin(), bv.data().end());
  const std::size_t na = av.size();
  return push(Array::vector(std::move(v)), any_grad({a, b}), [a, b, na](Graph& g, const Array& go) {
    if (g.requires_grad(a)) {
      Array& d = g.grad_buffer(a);
      for (std::size_t i = 0; i < na; ++i) d[i] += go[i];
    }
    if (g.requires_grad(b)) {
      Array& d = g.grad_buffer(b);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += go[na + i];
    }
  });
}

NodeId Graph::row(NodeId x, std::size_t r) {
  const Array& xv = value(x);
  if (xv.rank() != 2 || r >= xv.extent(0)) throw ShapeError("row: index out of range");
  const std::size_t d = xv.extent(1);
  std::vector<double> v(xv.data().begin() + static_cast<std::ptrdiff_t>(r * d),
                        xv.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * d));
  return push(Array::vector(std::move(v)), any_grad({x}), [x, r, d](Graph& g, const Array& go) {
    Array& dx = g.grad_buffer(x);
    for (std::size_t j = 0; j < d; ++j) dx[r * d + j] += go[j];
  });
}

NodeId Graph::pick(NodeId x, std::vector<std::size_t> flat_indices) {
  const Array& xv = value(x);
  std::vector<double> v;
  v.reserve(flat_indices.size());
  for (std::size_t i : flat_indices) {
    if (i >= xv.size()) throw ShapeError("pick: index out of range");
    v.push_back(xv[i]);
  }
  return push(Array::vector(std::move(v)), any_grad({x}), [x, idx = std::move(flat_indices)](Graph& g, const Array& go) {
    Array& d = g.grad_buffer(x);
    for (std::size_t k = 0; k < idx.size(); ++k) d[idx[k]] += go[k];
  });
}

NodeId Graph::gather_rows(NodeId table, std::vector<std::size_t> rows) {
  const Array& tv = value(table);
  if (tv.rank() != 2) throw ShapeError("gather_rows: table must be rank 2");
  const std::size_t d = tv.extent(1);
  Array out(Shape{rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= tv.extent(0)) throw ShapeError("gather_rows: row " + std::to_string(rows[i]) + " out of range");
    std::copy_n(tv.raw() + rows[i] * d, d, out.raw() + i * d);
  }
  return push(std::move(out), any_grad({table}), [table, d, rows = std::move(rows)](Graph& g, const Array& go) {
    Array& dt = g.grad_buffer(table);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) dt[rows[i] * d + j] += go[i * d + j];
  });
}

NodeId Graph::select_rows(std::vector<NodeId> sources, std::vector<std::pair<std::size_t, std::size_t>> picks) {
  if (sources.empty()) throw ShapeError("select_rows: no sources");
  const std::size_t d = last_extent(value(sources[0]));
  bool needs_grad = false;
  for (NodeId s : sources) {
    if (value(s).rank() != 2 || value(s).extent(1) != d) throw ShapeError("select_rows: width mismatch");
    needs_grad = needs_grad || requires_grad(s);
  }
  Array out(Shape{picks.size(), d});
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const auto [src, r] = picks[i];
    const Array& sv = value(sources.at(src));
    if (r >= sv.extent(0)) throw ShapeError("select_rows: row out of range");
    std::copy_n(sv.raw() + r * d, d, out.raw() + i * d);
  }
  return push(std::move(out), needs_grad,
              [d, sources = std::move(sources), picks = std::move(picks)](Graph& g, const Array& go) {
                for (std::size_t i = 0; i < picks.size(); ++i) {
                  const NodeId s = sources[picks[i].first];
                  if (!g.requires_grad(s)) continue;
                  Array& ds = g.grad_buffer(s);
                  for (std::size_t j = 0; j < d; ++j) ds[picks[i].second * d + j] += go[i * d + j];
                }
              });
}

// ---------------------------------------------------------------------------
// transformer pieces

NodeId Graph::layer_norm(NodeId x, NodeId gain, NodeId bias) {
  const Array& xv = value(x);
  const std::size_t d = last_extent(xv);
  if (value(gain).shape() != Shape{d} || value(bias).shape() != Shape{d}) {
    throw ShapeError("layer_norm: gain/bias must have extent " + std::to_string(d));
  }
  const std::size_t n = xv.rows();
  Array out(xv.shape());
  std::vector<double> xhat(n * d), inv_std(n);
  kernels::layer_norm(xv.raw(), n, d, value(gain).raw(), value(bias).raw(), out.raw(), xhat.data(), inv_std.data());
  return push(std::move(out), any_grad({x, gain, bias}),
              [x, gain, bias, n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Graph& g, const Array& go) {
                const Array& gv = g.value(gain);
                if (g.requires_grad(gain)) {
                  Array& dg = g.grad_buffer(gain);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < d; ++j) dg[j] += go[i * d + j] * xhat[i * d + j];
                }
                if (g.requires_grad(bias)) {
                  Array& db = g.grad_buffer(bias);
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < d; ++j) db[j] += go[i * d + j];
                }
                if (g.requires_grad(x)) {
                  Array& dx = g.grad_buffer(x);
                  const double inv_d = 1.0 / static_cast<double>(d);
                  for (std::size_t i = 0; i < n; ++i) {
                    double m1 = 0.0, m2 = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double dh = go[i * d + j] * gv[j];
                      m1 += dh;
                      m2 += dh * xhat[i * d + j];
                    }
                    m1 *= inv_d;
                    m2 *= inv_d;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double dh = go[i * d + j] * gv[j];
                      dx[i * d + j] += inv_std[i] * (dh - m1 - xhat[i * d + j] * m2);
                    }
                  }
                }
              });
}

NodeId Graph::causal_attention(NodeId q, NodeId k, NodeId v, std::size_t n_heads) {
  const Array& qv = value(q);
  require_same_shape(qv, value(k), "causal_attention");
  require_same_shape(qv, value(v), "causal_attention");
  if (qv.rank() != 2 || n_heads == 0 || qv.extent(1) % n_heads != 0) {
    throw ShapeError("causal_attention: bad shape " + shape_string(qv.shape()));
  }
  const std::size_t n = qv.extent(0), d = qv.extent(1);
  Array out(Shape{n, d});
  // probs[h][i][j], j <= i
  std::vector<double> probs(n_heads * n * n, 0.0);
  std::vector<double> row_probs(n_heads * n);
  for (std::size_t i = 0; i < n; ++i) {
    kernels::attend_row(qv.raw() + i * d, value(k).raw(), value(v).raw(), i + 1, nullptr, n_heads, d,
                        out.raw() + i * d, row_probs.data());
    for (std::size_t h = 0; h < n_heads; ++h)
      for (std::size_t j = 0; j <= i; ++j) probs[(h * n + i) * n + j] = row_probs[h * (i + 1) + j];
  }
  return push(std::move(out), any_grad({q, k, v}),
              [q, k, v, n, d, n_heads, probs = std::move(probs)](Graph& g, const Array& go) {
                const Array& qv = g.value(q);
                const Array& kv = g.value(k);
                const Array& vv = g.value(v);
                const std::size_t dh = d / n_heads;
                const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
                Array dq(Shape{n, d}), dk(Shape{n, d}), dv(Shape{n, d});
                std::vector<double> dp(n);
                for (std::size_t h = 0; h < n_heads; ++h) {
                  const std::size_t off = h * dh;
                  for (std::size_t i = 0; i < n; ++i) {
                    const double* p = probs.data() + (h * n + i) * n;
                    const double* gi = go.raw() + i * d + off;
                    double dot = 0.0;
                    for (std::size_t j = 0; j <= i; ++j) {
                      double s = 0.0;
                      const double* vj = vv.raw() + j * d + off;
                      for (std::size_t c = 0; c < dh; ++c) s += gi[c] * vj[c];
                      dp[j] = s;
                      dot += p[j] * s;
                    }
                    for (std::size_t j = 0; j <= i; ++j) {
                      const double ds = p[j] * (dp[j] - dot) * scale;
                      double* dqi = dq.raw() + i * d + off;
                      double* dkj = dk.raw() + j * d + off;
                      double* dvj = dv.raw() + j * d + off;
                      const double* qi = qv.raw() + i * d + off;
                      const double* kj = kv.raw() + j * d + off;
                      for (std::size_t c = 0; c < dh; ++c) {
                        dqi[c] += ds * kj[c];
                        dkj[c] += ds * qi[c];
                        dvj[c] += p[j] * gi[c];
                      }
                    }
                  }
                }
                const std::pair<NodeId, const Array*> parts[] = {{q, &dq}, {k, &dk}, {v, &dv}};
                for (const auto& [id, src] : parts) {
                  if (!g.requires_grad(id)) continue;
                  Array& dst = g.grad_buffer(id);
                  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += (*src)[i];
                }
              });
}

// ---------------------------------------------------------------------------
// likelihoods

NodeId Graph::softmax_cross_entropy(NodeId logits, std::size_t target) {
  const Array& lv = value(logits);
  if (lv.rank() != 1) throw ShapeError("softmax_cross_entropy: logits must be rank 1");
  if (target >= lv.size()) {
    throw std::out_of_range("softmax_cross_entropy: target " + std::to_string(target) + " >= " +
                            std::to_string(lv.size()));
  }
  std::vector<double> lsm(lv.size());
  kernels::log_softmax(lv.data(), lsm);
  const double loss = -lsm[target];
  return push(Array::scalar(loss), any_grad({logits}), [logits, target, lsm = std::move(lsm)](Graph& g, const Array& go) {
    Array& d = g.grad_buffer(logits);
    for (std::size_t i = 0; i < lsm.size(); ++i) {
      d[i] += go[0] * (std::exp(lsm[i]) - (i == target ? 1.0 : 0.0));
    }
  });
}

NodeId Graph::token_log_probs(NodeId logits, std::vector<LogProbRequest> requests) {
  const Array& lv = value(logits);
  if (lv.rank() != 2) throw ShapeError("token_log_probs: logits must be rank 2");
  const std::size_t n = lv.extent(0), vsz = lv.extent(1);
  std::vector<double> out(requests.size());
  std::vector<double> probs(requests.size() * vsz);
  std::vector<double> row(vsz), lsm(vsz);
  for (std::size_t k = 0; k < requests.size(); ++k) {
    const auto& rq = requests[k];
    if (rq.row >= n || rq.target >= vsz) throw std::out_of_range("token_log_probs: request out of range");
    for (std::size_t c : rq.masked_columns) {
      if (c >= vsz) throw std::out_of_range("token_log_probs: masked column out of range");
      if (c == rq.target) throw std::invalid_argument("token_log_probs: target is a masked column");
    }
    std::copy_n(lv.raw() + rq.row * vsz, vsz, row.begin());
    for (std::size_t c : rq.masked_columns) row[c] = std::numeric_limits<double>::lowest();
    kernels::log_softmax(row, lsm);
    out[k] = lsm[rq.target];
    for (std::size_t c = 0; c < vsz; ++c) probs[k * vsz + c] = std::exp(lsm[c]);
    for (std::size_t c : rq.masked_columns) probs[k * vsz + c] = 0.0;
  }
  return push(Array::vector(std::move(out)), any_grad({logits}),
              [logits, vsz, requests = std::move(requests), probs = std::move(probs)](Graph& g, const Array& go) {
                Array& d = g.grad_buffer(logits);
                for (std::size_t k = 0; k < requests.size(); ++k) {
                  const auto& rq = requests[k];
                  double* dr = d.raw() + rq.row * vsz;
                  // Masked columns carry zero probability, so they receive no gradient.
                  for (std::size_t c = 0; c < vsz; ++c) {
                    dr[c] += go[k] * ((c == rq.target ? 1.0 : 0.0) - probs[k * vsz + c]);
                  }
                }
              });
}

}  // namespace fovr

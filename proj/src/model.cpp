// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/model.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

#include "fovr/kernels.hpp"
#include "fovr/rng.hpp"

namespace fovr {

void ModelConfig::validate() const {
  if (n_layers < 2 || split < 1 || split >= n_layers) {
    throw std::invalid_argument("ModelConfig: need 1 <= split < n_layers");
  }
  if (n_heads == 0 || d % n_heads != 0) throw std::invalid_argument("ModelConfig: d must be divisible by n_heads");
  if (d < 2 || d % 2 != 0) throw std::invalid_argument("ModelConfig: d must be even");
  if (vocab < tok::kVocabSize) throw std::invalid_argument("ModelConfig: vocab smaller than the token table");
  if (patch == 0 || max_pos == 0) throw std::invalid_argument("ModelConfig: patch and max_pos must be positive");
}

MemoryEntry MemoryEntry::text_token(TokenId t) {
  MemoryEntry e;
  e.kind = EntryKind::text;
  e.token = t;
  return e;
}

MemoryEntry MemoryEntry::visual_patch(std::span<const double> pixels) {
  MemoryEntry e;
  e.kind = EntryKind::visual;
  e.patch.assign(pixels.begin(), pixels.end());
  return e;
}

MemoryEntry MemoryEntry::pad() {
  MemoryEntry e;
  e.kind = EntryKind::pad;
  e.position_id = kPadPosition;
  return e;
}

std::vector<MemoryEntry> with_positions(std::vector<MemoryEntry> entries, int first) {
  for (auto& e : entries) e.position_id = first++;
  return entries;
}

void mask_fov(std::span<double> logits) { logits[tok::kFovOpen] = std::numeric_limits<double>::lowest(); }

void mask_structural(std::span<double> logits) {
  logits[tok::kPad] = std::numeric_limits<double>::lowest();
  logits[tok::kFovClose] = std::numeric_limits<double>::lowest();
}

std::vector<std::size_t> masked_columns(bool fov_masked) {
  std::vector<std::size_t> out{tok::kPad, tok::kFovClose};
  if (fov_masked) out.push_back(tok::kFovOpen);
  return out;
}

// ---------------------------------------------------------------------------

Memory::Memory(const ModelConfig& cfg) : d_(cfg.d), layers_(cfg.n_layers) {}

std::size_t Memory::real_size() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

std::vector<MemoryEntry> Memory::real_entries() const {
  std::vector<MemoryEntry> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) {
    if (e.kind != EntryKind::pad) out.push_back(e);
  }
  return out;
}

void Memory::left_pad(std::size_t n) {
  if (n == 0) return;
  entries_.insert(entries_.begin(), n, MemoryEntry::pad());
  for (auto& layer : layers_) {
    layer.keys.insert(layer.keys.begin(), n * d_, 0.0);
    layer.values.insert(layer.values.begin(), n * d_, 0.0);
  }
  valid_.insert(valid_.begin(), n, std::uint8_t{0});
}

// ---------------------------------------------------------------------------

TransformerModel::TransformerModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t d = cfg_.d;
  auto gauss = [&](Shape s) { return ParameterStore::gaussian(std::move(s), cfg_.init_std, rng); };
  params_.add("tok_emb", gauss({cfg_.vocab, d}));
  params_.add("pos_emb", gauss({cfg_.max_pos, d}));
  params_.add("patch_proj.w", gauss({cfg_.patch_pixels(), d}));
  params_.add("patch_proj.b", Array(Shape{d}));
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    params_.add(p + "ln1.g", Array::full({d}, 1.0));
    params_.add(p + "ln1.b", Array(Shape{d}));
    params_.add(p + "attn.qkv.w", gauss({d, 3 * d}));
    params_.add(p + "attn.qkv.b", Array(Shape{3 * d}));
    params_.add(p + "attn.out.w", gauss({d, d}));
    params_.add(p + "attn.out.b", Array(Shape{d}));
    params_.add(p + "ln2.g", Array::full({d}, 1.0));
    params_.add(p + "ln2.b", Array(Shape{d}));
    params_.add(p + "mlp.fc.w", gauss({d, 4 * d}));
    params_.add(p + "mlp.fc.b", Array(Shape{4 * d}));
    params_.add(p + "mlp.proj.w", gauss({4 * d, d}));
    params_.add(p + "mlp.proj.b", Array(Shape{d}));
  }
  params_.add("ln_f.g", Array::full({d}, 1.0));
  params_.add("ln_f.b", Array(Shape{d}));
  params_.add("head.w", gauss({d, cfg_.vocab}));
  params_.add("head.b", Array(Shape{cfg_.vocab}));
  bind_layout();
}

TransformerModel::TransformerModel(const ModelConfig& cfg, ParameterStore params)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  bind_layout();
}

void TransformerModel::bind_layout() {
  auto idx = [&](const std::string& name, Shape shape) {
    const auto i = params_.find(name);
    if (!i) throw std::invalid_argument("model parameter missing: " + name);
    if (params_[*i].value.shape() != shape) {
      throw ShapeError("model parameter " + name + " has shape " + shape_string(params_[*i].value.shape()) +
                       ", expected " + shape_string(shape));
    }
    return *i;
  };
  const std::size_t d = cfg_.d;
  layout_.tok_emb = idx("tok_emb", {cfg_.vocab, d});
  layout_.pos_emb = idx("pos_emb", {cfg_.max_pos, d});
  layout_.patch_w = idx("patch_proj.w", {cfg_.patch_pixels(), d});
  layout_.patch_b = idx("patch_proj.b", {d});
  layout_.layers.clear();
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    layout_.layers.push_back(Layer{idx(p + "ln1.g", {d}), idx(p + "ln1.b", {d}), idx(p + "attn.qkv.w", {d, 3 * d}),
                                   idx(p + "attn.qkv.b", {3 * d}), idx(p + "attn.out.w", {d, d}),
                                   idx(p + "attn.out.b", {d}), idx(p + "ln2.g", {d}), idx(p + "ln2.b", {d}),
                                   idx(p + "mlp.fc.w", {d, 4 * d}), idx(p + "mlp.fc.b", {4 * d}),
                                   idx(p + "mlp.proj.w", {4 * d, d}), idx(p + "mlp.proj.b", {d})});
  }
  layout_.lnf_g = idx("ln_f.g", {d});
  layout_.lnf_b = idx("ln_f.b", {d});
  layout_.head_w = idx("head.w", {d, cfg_.vocab});
  layout_.head_b = idx("head.b", {cfg_.vocab});
}

std::vector<double> TransformerModel::embed(const MemoryEntry& entry) const {
  const std::size_t d = cfg_.d;
  if (entry.position_id < 0 || static_cast<std::size_t>(entry.position_id) >= cfg_.max_pos) {
    throw std::out_of_range("embed: position id " + std::to_string(entry.position_id) + " outside [0, max_pos)");
  }
  std::vector<double> out(d);
  switch (entry.kind) {
    case EntryKind::text: {
      if (entry.token >= cfg_.vocab) throw std::out_of_range("embed: token id out of range");
      const double* row = params_[layout_.tok_emb].value.raw() + entry.token * d;
      std::copy_n(row, d, out.begin());
      break;
    }
    case EntryKind::visual: {
      if (entry.patch.size() != cfg_.patch_pixels()) throw ShapeError("embed: patch has wrong pixel count");
      kernels::affine(entry.patch.data(), 1, cfg_.patch_pixels(), params_[layout_.patch_w].value.raw(),
                      params_[layout_.patch_b].value.raw(), d, out.data());
      break;
    }
    case EntryKind::pad:
      throw std::invalid_argument("embed: PAD entries are never embedded");
  }
  const double* pos = params_[layout_.pos_emb].value.raw() + static_cast<std::size_t>(entry.position_id) * d;
  for (std::size_t j = 0; j < d; ++j) out[j] += pos[j];
  return out;
}

StepOutput TransformerModel::forward_step(Memory& mem, std::span<const MemoryEntry> new_entries,
                                          bool keep_all) const {
  if (new_entries.empty()) throw std::invalid_argument("forward_step: no new entries");
  const std::size_t d = cfg_.d, n = new_entries.size();
  if (static_cast<std::size_t>(mem.next_position_) + n > cfg_.max_pos) {
    throw std::out_of_range("forward_step: sequence would exceed max_pos = " + std::to_string(cfg_.max_pos));
  }
  const std::size_t n_old = mem.cached_rows();

  std::vector<double> x(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    MemoryEntry e = new_entries[i];
    if (e.kind == EntryKind::pad) throw std::invalid_argument("forward_step: PAD entries must be left-padded");
    e.position_id = mem.next_position_++;
    const auto emb = embed(e);
    std::copy(emb.begin(), emb.end(), x.begin() + static_cast<std::ptrdiff_t>(i * d));
    mem.entries_.push_back(std::move(e));
    mem.valid_.push_back(1);
  }

  StepOutput out;
  std::vector<double> ln(n * d), qkv(n * 3 * d), att(n * d), tmp(n * d), fc(n * 4 * d);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const Layer& L = layout_.layers[l];
    auto P = [&](std::size_t i) { return params_[i].value.raw(); };
    kernels::layer_norm(x.data(), n, d, P(L.ln1_g), P(L.ln1_b), ln.data());
    kernels::affine(ln.data(), n, d, P(L.qkv_w), P(L.qkv_b), 3 * d, qkv.data());
    auto& cache = mem.layers_[l];
    for (std::size_t i = 0; i < n; ++i) {
      const double* r = qkv.data() + i * 3 * d;
      cache.keys.insert(cache.keys.end(), r + d, r + 2 * d);
      cache.values.insert(cache.values.end(), r + 2 * d, r + 3 * d);
    }
    for (std::size_t i = 0; i < n; ++i) {
      kernels::attend_row(qkv.data() + i * 3 * d, cache.keys.data(), cache.values.data(), n_old + i + 1,
                          mem.valid_.data(), cfg_.n_heads, d, att.data() + i * d);
    }
    kernels::affine(att.data(), n, d, P(L.out_w), P(L.out_b), d, tmp.data());
    for (std::size_t j = 0; j < n * d; ++j) x[j] += tmp[j];
    kernels::layer_norm(x.data(), n, d, P(L.ln2_g), P(L.ln2_b), ln.data());
    kernels::affine(ln.data(), n, d, P(L.fc_w), P(L.fc_b), 4 * d, fc.data());
    for (double& v : fc) v = kernels::gelu(v);
    kernels::affine(fc.data(), n, 4 * d, P(L.proj_w), P(L.proj_b), d, tmp.data());
    for (std::size_t j = 0; j < n * d; ++j) x[j] += tmp[j];
    if (l + 1 == cfg_.split) {
      out.state.h = Array(Shape{d}, std::vector<double>(x.end() - static_cast<std::ptrdiff_t>(d), x.end()));
      if (keep_all) {
        for (std::size_t i = 0; i < n; ++i) {
          out.all_states.push_back(Array(Shape{d}, std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(i * d),
                                                                       x.begin() + static_cast<std::ptrdiff_t>((i + 1) * d))));
        }
      }
    }
  }

  const std::size_t first = keep_all ? 0 : n - 1;
  const std::size_t rows = n - first;
  std::vector<double> lnf(rows * d), logits(rows * cfg_.vocab);
  kernels::layer_norm(x.data() + first * d, rows, d, params_[layout_.lnf_g].value.raw(),
                      params_[layout_.lnf_b].value.raw(), lnf.data());
  kernels::affine(lnf.data(), rows, d, params_[layout_.head_w].value.raw(), params_[layout_.head_b].value.raw(),
                  cfg_.vocab, logits.data());
  const auto V = static_cast<std::ptrdiff_t>(cfg_.vocab);
  out.logits.assign(logits.end() - V, logits.end());
  if (keep_all) {
    for (std::size_t i = 0; i < rows; ++i) {
      out.all_logits.emplace_back(logits.begin() + static_cast<std::ptrdiff_t>(i) * V,
                                  logits.begin() + static_cast<std::ptrdiff_t>(i + 1) * V);
    }
  }
  return out;
}

SequenceNodes TransformerModel::forward_graph(ParamBinder& bind, std::span<const MemoryEntry> entries) const {
  if (entries.empty()) throw std::invalid_argument("forward_graph: empty sequence");
  Graph& g = bind.graph();
  const std::size_t d = cfg_.d;
  std::vector<std::size_t> text_ids, positions;
  std::vector<double> patch_pixels;
  std::vector<std::pair<std::size_t, std::size_t>> picks;
  std::size_t n_visual = 0;
  for (const auto& e : entries) {
    if (e.position_id < 0 || static_cast<std::size_t>(e.position_id) >= cfg_.max_pos) {
      throw std::out_of_range("forward_graph: position id outside [0, max_pos)");
    }
    positions.push_back(static_cast<std::size_t>(e.position_id));
    if (e.kind == EntryKind::text) {
      if (e.token >= cfg_.vocab) throw std::out_of_range("forward_graph: token id out of range");
      picks.emplace_back(0, text_ids.size());
      text_ids.push_back(e.token);
    } else if (e.kind == EntryKind::visual) {
      if (e.patch.size() != cfg_.patch_pixels()) throw ShapeError("forward_graph: patch has wrong pixel count");
      picks.emplace_back(1, n_visual++);
      patch_pixels.insert(patch_pixels.end(), e.patch.begin(), e.patch.end());
    } else {
      throw std::invalid_argument("forward_graph: PAD entries are not supported");
    }
  }
  std::vector<NodeId> sources;
  if (!text_ids.empty()) {
    sources.push_back(g.gather_rows(bind(layout_.tok_emb), text_ids));
  } else {
    sources.push_back(g.constant(Array(Shape{1, d})));
  }
  if (n_visual > 0) {
    const NodeId pix = g.constant(Array(Shape{n_visual, cfg_.patch_pixels()}, std::move(patch_pixels)));
    sources.push_back(g.affine(pix, bind(layout_.patch_w), bind(layout_.patch_b)));
  }
  NodeId x = g.select_rows(sources, picks);
  x = g.add(x, g.gather_rows(bind(layout_.pos_emb), positions));

  SequenceNodes out{};
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const Layer& L = layout_.layers[l];
    const NodeId ln1 = g.layer_norm(x, bind(L.ln1_g), bind(L.ln1_b));
    const NodeId qkv = g.affine(ln1, bind(L.qkv_w), bind(L.qkv_b));
    const NodeId q = g.slice_cols(qkv, 0, d);
    const NodeId k = g.slice_cols(qkv, d, 2 * d);
    const NodeId v = g.slice_cols(qkv, 2 * d, 3 * d);
    const NodeId att = g.causal_attention(q, k, v, cfg_.n_heads);
    x = g.add(x, g.affine(att, bind(L.out_w), bind(L.out_b)));
    const NodeId ln2 = g.layer_norm(x, bind(L.ln2_g), bind(L.ln2_b));
    const NodeId fc = g.gelu(g.affine(ln2, bind(L.fc_w), bind(L.fc_b)));
    x = g.add(x, g.affine(fc, bind(L.proj_w), bind(L.proj_b)));
    if (l + 1 == cfg_.split) out.split_hidden = x;
  }
  const NodeId lnf = g.layer_norm(x, bind(layout_.lnf_g), bind(layout_.lnf_b));
  out.logits = g.affine(lnf, bind(layout_.head_w), bind(layout_.head_b));
  return out;
}

Array TransformerModel::full_logits(std::span<const MemoryEntry> entries) const {
  Graph g;
  ParamBinder bind(g, params_);
  const SequenceNodes nodes = forward_graph(bind, entries);
  return g.value(nodes.logits);
}

}  // namespace fovr

// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Decoder-only transformer split into a state estimator (the first
// `split` blocks, whose output at the last position is the agent state) and
// a token policy (the remaining blocks plus the output head).

#include <cstdint>
#include <span>
#include <vector>

#include "fovr/array.hpp"
#include "fovr/autograd.hpp"
#include "fovr/params.hpp"
#include "fovr/vocab.hpp"

namespace fovr {

struct ModelConfig {
  std::size_t d = 64;
  std::size_t n_layers = 4;
  std::size_t split = 3;
  std::size_t n_heads = 4;
  std::size_t patch = 8;
  std::size_t vocab = tok::kVocabSize;
  std::size_t max_pos = 512;
  double init_std = 0.02;

  void validate() const;
  std::size_t patch_pixels() const { return patch * patch; }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class EntryKind : std::uint8_t { text = 0, visual = 1, pad = 2 };

inline constexpr int kPadPosition = 0;

struct MemoryEntry {
  EntryKind kind = EntryKind::text;
  TokenId token = tok::kPad;
  std::vector<double> patch;  // P*P pixels for visual entries
  int position_id = -1;       // assigned when the entry enters a Memory

  static MemoryEntry text_token(TokenId t);
  static MemoryEntry visual_patch(std::span<const double> pixels);
  static MemoryEntry pad();
  friend bool operator==(const MemoryEntry&, const MemoryEntry&) = default;
};

/// Append-only interaction history with its per-layer key/value cache.
/// Left padding (batched decoding) inserts masked PAD rows ahead of the
/// history without reordering any real entry.
class Memory {
 public:
  explicit Memory(const ModelConfig& cfg);

  const std::vector<MemoryEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t cached_rows() const { return valid_.size(); }
  int next_position() const { return next_position_; }
  std::size_t real_size() const;
  bool is_attended(std::size_t i) const { return valid_.at(i) != 0; }
  // Real (non-PAD) entries in order.
  std::vector<MemoryEntry> real_entries() const;

  void left_pad(std::size_t n);

 private:
  friend class TransformerModel;
  struct LayerCache {
    std::vector<double> keys;
    std::vector<double> values;
  };
  std::size_t d_;
  std::vector<MemoryEntry> entries_;
  std::vector<LayerCache> layers_;
  std::vector<std::uint8_t> valid_;
  int next_position_ = 0;
};

struct AgentState {
  Array h;  // [d]
};

struct StepOutput {
  AgentState state;                       // layer-`split` hidden at the last new entry
  std::vector<double> logits;             // next-token logits at the last new entry
  std::vector<std::vector<double>> all_logits;  // per new entry, when requested
  std::vector<Array> all_states;                // per new entry, when requested
};

/// Graph handles for a teacher-forced pass over a whole sequence.
struct SequenceNodes {
  NodeId logits;        // [n, vocab]
  NodeId split_hidden;  // [n, d]
};

class TransformerModel {
 public:
  TransformerModel(const ModelConfig& cfg, std::uint64_t seed);
  TransformerModel(const ModelConfig& cfg, ParameterStore params);

  const ModelConfig& config() const { return cfg_; }
  const ParameterStore& params() const { return params_; }
  ParameterStore& params() { return params_; }

  std::vector<double> embed(const MemoryEntry& entry) const;

  /// Appends `new_entries` to `mem` (assigning consecutive position ids),
  /// extends the cache and returns the agent state and logits at the last
  /// new entry. PAD entries may not be passed here; use Memory::left_pad.
  StepOutput forward_step(Memory& mem, std::span<const MemoryEntry> new_entries, bool keep_all = false) const;

  /// Differentiable pass over entries with assigned position ids.
  SequenceNodes forward_graph(ParamBinder& bind, std::span<const MemoryEntry> entries) const;

  /// Logits for every position without any cache (graph path, no backward).
  Array full_logits(std::span<const MemoryEntry> entries) const;

  /// Index layout of the parameter store.
  struct Layer {
    std::size_t ln1_g, ln1_b, qkv_w, qkv_b, out_w, out_b, ln2_g, ln2_b, fc_w, fc_b, proj_w, proj_b;
  };
  struct Layout {
    std::size_t tok_emb, pos_emb, patch_w, patch_b, lnf_g, lnf_b, head_w, head_b;
    std::vector<Layer> layers;
  };
  const Layout& layout() const { return layout_; }

 private:
  void bind_layout();

  ModelConfig cfg_;
  ParameterStore params_;
  Layout layout_{};
};

/// Sets the `<fov>` logit to the lowest finite double.
void mask_fov(std::span<double> logits);

/// Sets the PAD and `</fov>` logits to the lowest finite double. Neither is
/// ever a model action: PAD is batching filler and `</fov>` is appended by
/// the environment with each evidence block.
void mask_structural(std::span<double> logits);

/// Columns masked at a decoding step: the structural tokens, plus `<fov>`
/// when the foveation budget is closed.
std::vector<std::size_t> masked_columns(bool fov_masked);

/// Assigns positions 0..n-1 to a fresh sequence of entries.
std::vector<MemoryEntry> with_positions(std::vector<MemoryEntry> entries, int first = 0);

}  // namespace fovr

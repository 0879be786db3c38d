// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary persistence. All integers and floats are little-endian.
//
// Dataset ("FOVE"):
//   magic[4] version:u16 count:u32, then per episode
//     task:u8 seed:u64
//     high_res, low_res: height:u16 width:u16 pixels:f32[h*w]
//     question, answer, glyphs: len:u16 ids:u16[len]
//     boxes: len:u16 (cx,cy,w,h):f32[4*len]
//   version 2 appends a target layout record per episode:
//     mode:u8 len:u16 codes:u16[len] lm_mask:u8[len]
//   where a code is a token id, or 0xFFFF for a visual entry.
//
// Checkpoint ("FOVR"):
//   magic[4] version:u32 count:u32, then per record
//     name_len:u32 name:bytes rank:u32 dims:u32[rank] data:f32[prod(dims)]
//   then checksum:u64, the FNV-1a hash of every preceding byte.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fovr/coldstart.hpp"
#include "fovr/env.hpp"
#include "fovr/fov_policy.hpp"
#include "fovr/model.hpp"
#include "fovr/params.hpp"

namespace fovr::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n);

inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::uint16_t kDatasetVersionWithTargets = 2;
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint16_t kVisualCode = 0xFFFF;

/// Target layout as stored in version-2 datasets.
struct TargetLayout {
  RationaleMode mode = RationaleMode::interleaved;
  std::vector<std::uint16_t> codes;
  std::vector<std::uint8_t> lm_mask;
  friend bool operator==(const TargetLayout&, const TargetLayout&) = default;
};

TargetLayout layout_of(const TargetSequence& target);

struct Dataset {
  std::uint16_t version = kDatasetVersion;
  std::vector<env::Episode> episodes;
  std::vector<TargetLayout> layouts;  // empty unless version 2
};

std::vector<std::uint8_t> encode_dataset(const Dataset& data);
Dataset decode_dataset(const std::vector<std::uint8_t>& bytes);

void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

/// Model and box-policy weights plus the configs needed to rebuild them.
struct Checkpoint {
  ModelConfig model_config;
  FovPolicyConfig fov_config;
  ParameterStore model;
  ParameterStore fov;
};

Checkpoint make_checkpoint(const TransformerModel& model, const FovPolicy& policy);
TransformerModel model_from(const Checkpoint& ckpt);
FovPolicy policy_from(const Checkpoint& ckpt);

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

}  // namespace fovr::io

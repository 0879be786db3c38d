// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace fovr {

using TokenId = std::uint16_t;

// Fixed token table. Specials come first, then the task vocabulary.
namespace tok {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kFovOpen = 2;
inline constexpr TokenId kFovClose = 3;
inline constexpr TokenId kThinkOpen = 4;
inline constexpr TokenId kThinkClose = 5;
inline constexpr TokenId kAnsOpen = 6;
inline constexpr TokenId kAnsClose = 7;
inline constexpr TokenId kAskIdentify = 8;
inline constexpr TokenId kAskCompare = 9;
inline constexpr TokenId kSame = 10;
inline constexpr TokenId kDiff = 11;
inline constexpr TokenId kGlyphBase = 12;
inline constexpr int kNumGlyphs = 16;
inline constexpr TokenId kRowBase = kGlyphBase + kNumGlyphs;
inline constexpr int kNumRows = 8;
inline constexpr TokenId kColBase = kRowBase + kNumRows;
inline constexpr int kNumCols = 8;
inline constexpr std::size_t kVocabSize = kColBase + kNumCols;

constexpr TokenId glyph(int cls) { return static_cast<TokenId>(kGlyphBase + cls); }
constexpr TokenId row(int r) { return static_cast<TokenId>(kRowBase + r); }
constexpr TokenId col(int c) { return static_cast<TokenId>(kColBase + c); }
constexpr bool is_glyph(TokenId t) { return t >= kGlyphBase && t < kGlyphBase + kNumGlyphs; }

std::string name(TokenId t);
}  // namespace tok

}  // namespace fovr

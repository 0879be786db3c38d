// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Synthetic foveation environment. Glyphs sit on an 8x8 cell grid of a 64x64
// image, each framed by a bright marker ring. Every 3x3 quadrant of every
// glyph pattern has the same number of lit pixels, so the 16x16 block-mean
// view shows where the glyphs are but carries no information about which
// class they belong to.

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "fovr/array.hpp"
#include "fovr/vocab.hpp"

namespace fovr::env {

inline constexpr int kHighRes = 64;
inline constexpr int kLowRes = 16;
inline constexpr int kPatch = 8;
inline constexpr int kCellGrid = 8;
inline constexpr int kCellPx = kHighRes / kCellGrid;
inline constexpr int kGlyphPx = 6;
inline constexpr int kNumGlyphClasses = tok::kNumGlyphs;
inline constexpr double kMinBoxSize = 0.1;

struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // row-major, values in [0,1]

  Image() = default;
  Image(int h, int w, double fill = 0.0);
  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r * width + c)]; }
  double& at(int r, int c) { return pixels[static_cast<std::size_t>(r * width + c)]; }
  friend bool operator==(const Image&, const Image&) = default;
};

enum class TaskKind : std::uint8_t { identify = 0, compare = 1 };
std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view s);

/// Box action in normalized coordinates: center in [-1,1]^2, size 1 spans
/// half of the image extent.
struct BoxAction {
  double cx = 0.0, cy = 0.0, w = 0.5, h = 0.5;
  friend bool operator==(const BoxAction&, const BoxAction&) = default;
};

bool is_valid(const BoxAction& b, double min_size = kMinBoxSize, double max_size = 1.0);

/// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct PixelRect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() > 0 && height() > 0 ? width() * height() : 0.0; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Unclamped pixel geometry of a box on an image of the given size.
PixelRect box_to_rect(const BoxAction& b, int height, int width);
/// Inverse of box_to_rect.
BoxAction rect_to_box(const PixelRect& r, int height, int width);

struct PatchBlock {
  Array patches;  // [m, P*P], row-major scan order over the snapped grid
  int rows = 0;
  int cols = 0;
  PixelRect source_rect;  // clamped and snapped outward to the patch grid
  int m() const { return rows * cols; }
};

struct EnvConfig {
  double box_jitter_px = 2.0;  // uniform jitter of oracle box centers
  double noise_max = 0.3;      // background noise amplitude
};

struct Episode {
  std::uint64_t seed = 0;
  TaskKind kind = TaskKind::identify;
  Image high_res;
  Image low_res;
  std::vector<TokenId> question;
  std::vector<TokenId> answer;
  std::vector<TokenId> glyphs;  // class token of the glyph under each oracle box
  std::vector<BoxAction> oracle_boxes;
  friend bool operator==(const Episode&, const Episode&) = default;
};

/// 6x6 binary class templates, fixed for the lifetime of the program.
const std::array<std::array<std::uint8_t, kGlyphPx * kGlyphPx>, kNumGlyphClasses>& glyph_templates();

/// Deterministic in (seed, kind, config).
Episode generate_episode(std::uint64_t seed, TaskKind kind, const EnvConfig& cfg = {});

/// Block-mean pooling. Requires exact divisibility.
Image downsample(const Image& img, int out_height, int out_width);

/// Every P x P tile of the image, row-major.
PatchBlock tokenize(const Image& img, int patch);

/// Maps b to a pixel rectangle, clamps it to the image, snaps it outward to the
/// patch grid and extracts the covered tiles. Always yields m >= 1.
PatchBlock crop_tokenize(const Image& img, const BoxAction& b, int patch = kPatch);

double iou(const PixelRect& a, const PixelRect& b);
/// IoU of the unsnapped pixel rectangles on a 64x64 canvas.
double iou(const BoxAction& a, const BoxAction& b, int height = kHighRes, int width = kHighRes);

/// Fraction of the image covered by the union of the given integer-aligned rectangles.
double union_area_fraction(const std::vector<PixelRect>& rects, int height, int width);

/// Cell (row, col) under a pixel position.
std::pair<int, int> cell_of(double x_px, double y_px);

}  // namespace fovr::env

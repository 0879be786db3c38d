// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fovr/rng.hpp"

namespace fovr {

std::string tok::name(TokenId t) {
  switch (t) {
    case kPad: return "<pad>";
    case kEos: return "<eos>";
    case kFovOpen: return "<fov>";
    case kFovClose: return "</fov>";
    case kThinkOpen: return "<think>";
    case kThinkClose: return "</think>";
    case kAnsOpen: return "<answer>";
    case kAnsClose: return "</answer>";
    case kAskIdentify: return "IDENTIFY?";
    case kAskCompare: return "COMPARE?";
    case kSame: return "SAME";
    case kDiff: return "DIFF";
    default: break;
  }
  if (is_glyph(t)) return "G" + std::to_string(t - kGlyphBase);
  if (t >= kRowBase && t < kRowBase + kNumRows) return "R" + std::to_string(t - kRowBase);
  if (t >= kColBase && t < kColBase + kNumCols) return "C" + std::to_string(t - kColBase);
  return "<unk:" + std::to_string(t) + ">";
}

namespace env {

namespace {

constexpr int kQuadrantLit = 4;

using Glyph = std::array<std::uint8_t, kGlyphPx * kGlyphPx>;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Glyph random_glyph(Rng& rng) {
  Glyph g{};
  for (int qr = 0; qr < 2; ++qr) {
    for (int qc = 0; qc < 2; ++qc) {
      std::array<int, 9> cells{0, 1, 2, 3, 4, 5, 6, 7, 8};
      for (int i = 8; i > 0; --i) std::swap(cells[i], cells[rng.below(static_cast<std::uint64_t>(i + 1))]);
      for (int k = 0; k < kQuadrantLit; ++k) {
        const int r = qr * 3 + cells[k] / 3;
        const int c = qc * 3 + cells[k] % 3;
        g[r * kGlyphPx + c] = 1;
      }
    }
  }
  return g;
}

int hamming(const Glyph& a, const Glyph& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

std::array<Glyph, kNumGlyphClasses> build_templates() {
  // Greedy max-min Hamming selection from a fixed candidate pool.
  Rng rng(0x676c797068ull);
  std::vector<Glyph> pool(3000);
  for (auto& g : pool) g = random_glyph(rng);
  std::array<Glyph, kNumGlyphClasses> chosen{};
  chosen[0] = pool[0];
  for (int k = 1; k < kNumGlyphClasses; ++k) {
    int best = -1;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      int dmin = 1 << 20;
      for (int j = 0; j < k; ++j) dmin = std::min(dmin, hamming(pool[i], chosen[j]));
      if (dmin > best) {
        best = dmin;
        best_idx = i;
      }
    }
    chosen[k] = pool[best_idx];
  }
  return chosen;
}

void draw_glyph_cell(Image& img, int cell_row, int cell_col, const Glyph& g) {
  const int y0 = cell_row * kCellPx, x0 = cell_col * kCellPx;
  for (int r = 0; r < kCellPx; ++r) {
    for (int c = 0; c < kCellPx; ++c) {
      const bool ring = r == 0 || c == 0 || r == kCellPx - 1 || c == kCellPx - 1;
      double v = 1.0;
      if (!ring) v = g[(r - 1) * kGlyphPx + (c - 1)] ? 1.0 : 0.0;
      img.at(y0 + r, x0 + c) = v;
    }
  }
}

// Jitter on a 1/16-pixel lattice keeps box coordinates exact in single precision.
double lattice_jitter(Rng& rng, double max_px) {
  const auto steps = static_cast<std::int64_t>(std::floor(max_px * 16.0));
  if (steps <= 0) return 0.0;
  const auto k = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(2 * steps + 1))) - steps;
  return static_cast<double>(k) / 16.0;
}

BoxAction oracle_box(int cell, Rng& rng, const EnvConfig& cfg) {
  const int r = cell / kCellGrid, c = cell % kCellGrid;
  const double cx = c * kCellPx + kCellPx / 2.0 + lattice_jitter(rng, cfg.box_jitter_px);
  const double cy = r * kCellPx + kCellPx / 2.0 + lattice_jitter(rng, cfg.box_jitter_px);
  const double half = kGlyphPx / 2.0;
  return rect_to_box(PixelRect{cx - half, cy - half, cx + half, cy + half}, kHighRes, kHighRes);
}

}  // namespace

Image::Image(int h, int w, double fill)
    : height(h), width(w), pixels(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

std::string_view to_string(TaskKind kind) { return kind == TaskKind::identify ? "identify" : "compare"; }

TaskKind parse_task_kind(std::string_view s) {
  if (s == "identify") return TaskKind::identify;
  if (s == "compare") return TaskKind::compare;
  throw std::invalid_argument("unknown task kind: " + std::string(s));
}

bool is_valid(const BoxAction& b, double min_size, double max_size) {
  return b.cx >= -1.0 && b.cx <= 1.0 && b.cy >= -1.0 && b.cy <= 1.0 && b.w >= min_size && b.w <= max_size &&
         b.h >= min_size && b.h <= max_size;
}

PixelRect box_to_rect(const BoxAction& b, int height, int width) {
  const double cx = (b.cx + 1.0) * 0.5 * width;
  const double cy = (b.cy + 1.0) * 0.5 * height;
  const double half_w = b.w * width / 4.0;
  const double half_h = b.h * height / 4.0;
  return PixelRect{cx - half_w, cy - half_h, cx + half_w, cy + half_h};
}

BoxAction rect_to_box(const PixelRect& r, int height, int width) {
  const double cx = (r.x0 + r.x1) / 2.0, cy = (r.y0 + r.y1) / 2.0;
  return BoxAction{cx / width * 2.0 - 1.0, cy / height * 2.0 - 1.0, r.width() * 2.0 / width,
                   r.height() * 2.0 / height};
}

const std::array<std::array<std::uint8_t, kGlyphPx * kGlyphPx>, kNumGlyphClasses>& glyph_templates() {
  static const auto templates = build_templates();
  return templates;
}

Episode generate_episode(std::uint64_t seed, TaskKind kind, const EnvConfig& cfg) {
  Rng rng(splitmix64(seed ^ (static_cast<std::uint64_t>(kind) + 1) * 0xA24BAED4963EE407ull));
  Episode ep;
  ep.seed = seed;
  ep.kind = kind;
  ep.high_res = Image(kHighRes, kHighRes);
  const auto noise_levels = static_cast<std::uint64_t>(std::floor(cfg.noise_max * 256.0)) + 1;
  for (double& p : ep.high_res.pixels) p = static_cast<double>(rng.below(noise_levels)) / 256.0;

  std::vector<int> cells;
  std::vector<int> classes;
  constexpr int n_cells = kCellGrid * kCellGrid;
  if (kind == TaskKind::identify) {
    cells.push_back(static_cast<int>(rng.below(n_cells)));
    classes.push_back(static_cast<int>(rng.below(kNumGlyphClasses)));
    ep.question = {tok::kAskIdentify};
    ep.answer = {tok::glyph(classes[0])};
  } else {
    const int a = static_cast<int>(rng.below(n_cells));
    int b = a;
    while (std::max(std::abs(b / kCellGrid - a / kCellGrid), std::abs(b % kCellGrid - a % kCellGrid)) < 2) {
      b = static_cast<int>(rng.below(n_cells));
    }
    cells = {std::min(a, b), std::max(a, b)};
    const bool same = rng.uniform() < 0.5;
    const int ca = static_cast<int>(rng.below(kNumGlyphClasses));
    int cb = ca;
    if (!same) cb = static_cast<int>((ca + 1 + rng.below(kNumGlyphClasses - 1)) % kNumGlyphClasses);
    classes = {ca, cb};
    ep.question = {tok::kAskCompare};
    ep.answer = {same ? tok::kSame : tok::kDiff};
  }
  const auto& templates = glyph_templates();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    draw_glyph_cell(ep.high_res, cells[i] / kCellGrid, cells[i] % kCellGrid,
                    templates[static_cast<std::size_t>(classes[i])]);
    ep.glyphs.push_back(tok::glyph(classes[i]));
    ep.oracle_boxes.push_back(oracle_box(cells[i], rng, cfg));
  }
  ep.low_res = downsample(ep.high_res, kLowRes, kLowRes);
  return ep;
}

Image downsample(const Image& img, int out_height, int out_width) {
  if (out_height <= 0 || out_width <= 0 || img.height % out_height != 0 || img.width % out_width != 0) {
    throw ShapeError("downsample: " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                     " is not divisible into " + std::to_string(out_height) + "x" + std::to_string(out_width));
  }
  const int bh = img.height / out_height, bw = img.width / out_width;
  Image out(out_height, out_width);
  const double inv = 1.0 / (bh * bw);
  for (int r = 0; r < out_height; ++r) {
    for (int c = 0; c < out_width; ++c) {
      double s = 0.0;
      for (int i = 0; i < bh; ++i)
        for (int j = 0; j < bw; ++j) s += img.at(r * bh + i, c * bw + j);
      out.at(r, c) = s * inv;
    }
  }
  return out;
}

namespace {

PatchBlock extract(const Image& img, int x0, int y0, int x1, int y1, int patch) {
  PatchBlock block;
  block.cols = (x1 - x0) / patch;
  block.rows = (y1 - y0) / patch;
  block.source_rect = PixelRect{static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1),
                                static_cast<double>(y1)};
  const auto p2 = static_cast<std::size_t>(patch * patch);
  block.patches = Array(Shape{static_cast<std::size_t>(block.m()), p2});
  std::size_t k = 0;
  for (int pr = 0; pr < block.rows; ++pr) {
    for (int pc = 0; pc < block.cols; ++pc, ++k) {
      double* dst = block.patches.raw() + k * p2;
      for (int i = 0; i < patch; ++i)
        for (int j = 0; j < patch; ++j) dst[i * patch + j] = img.at(y0 + pr * patch + i, x0 + pc * patch + j);
    }
  }
  return block;
}

// Outward snap of a clamped [lo, hi) span to the patch grid, at least one patch wide.
std::pair<int, int> snap_span(double lo, double hi, int extent, int patch) {
  lo = std::clamp(lo, 0.0, static_cast<double>(extent));
  hi = std::clamp(hi, 0.0, static_cast<double>(extent));
  int a = static_cast<int>(std::floor(lo / patch)) * patch;
  int b = static_cast<int>(std::ceil(hi / patch)) * patch;
  a = std::clamp(a, 0, extent - patch);
  b = std::clamp(b, a + patch, extent);
  return {a, b};
}

}  // namespace

PatchBlock tokenize(const Image& img, int patch) {
  if (patch <= 0 || img.height % patch != 0 || img.width % patch != 0) {
    throw ShapeError("tokenize: image is not a multiple of the patch size");
  }
  return extract(img, 0, 0, img.width, img.height, patch);
}

PatchBlock crop_tokenize(const Image& img, const BoxAction& b, int patch) {
  if (patch <= 0 || img.height % patch != 0 || img.width % patch != 0) {
    throw ShapeError("crop_tokenize: image is not a multiple of the patch size");
  }
  const PixelRect r = box_to_rect(b, img.height, img.width);
  const auto [x0, x1] = snap_span(r.x0, r.x1, img.width, patch);
  const auto [y0, y1] = snap_span(r.y0, r.y1, img.height, patch);
  return extract(img, x0, y0, x1, y1, patch);
}

double iou(const PixelRect& a, const PixelRect& b) {
  const PixelRect inter{std::max(a.x0, b.x0), std::max(a.y0, b.y0), std::min(a.x1, b.x1), std::min(a.y1, b.y1)};
  const double i = inter.area();
  const double u = a.area() + b.area() - i;
  if (u <= 0.0) return 0.0;
  return std::clamp(i / u, 0.0, 1.0);
}

double iou(const BoxAction& a, const BoxAction& b, int height, int width) {
  return iou(box_to_rect(a, height, width), box_to_rect(b, height, width));
}

double union_area_fraction(const std::vector<PixelRect>& rects, int height, int width) {
  if (rects.empty()) return 0.0;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(height * width), 0);
  for (const auto& r : rects) {
    const int x0 = std::clamp(static_cast<int>(std::floor(r.x0)), 0, width);
    const int x1 = std::clamp(static_cast<int>(std::ceil(r.x1)), 0, width);
    const int y0 = std::clamp(static_cast<int>(std::floor(r.y0)), 0, height);
    const int y1 = std::clamp(static_cast<int>(std::ceil(r.y1)), 0, height);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) mask[static_cast<std::size_t>(y * width + x)] = 1;
  }
  std::size_t covered = 0;
  for (auto v : mask) covered += v;
  return static_cast<double>(covered) / static_cast<double>(height * width);
}

std::pair<int, int> cell_of(double x_px, double y_px) {
  const int c = std::clamp(static_cast<int>(std::floor(x_px / kCellPx)), 0, kCellGrid - 1);
  const int r = std::clamp(static_cast<int>(std::floor(y_px / kCellPx)), 0, kCellGrid - 1);
  return {r, c};
}

}  // namespace env
}  // namespace fovr

// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fovr/decode.hpp"
#include "fovr/env.hpp"
#include "fovr/kernels.hpp"
#include "support.hpp"

using namespace fovr;

namespace {

// Zero-weight head whose bias fixes the logits independently of the input.
TransformerModel biased_model(std::initializer_list<std::pair<TokenId, double>> bias, std::uint64_t seed = 3) {
  TransformerModel m(fovr::testing::tiny_model_config(), seed);
  auto& w = m.params()[m.layout().head_w].value;
  std::fill(w.data().begin(), w.data().end(), 0.0);
  auto& b = m.params()[m.layout().head_b].value;
  std::fill(b.data().begin(), b.data().end(), 0.0);
  for (const auto& [t, v] : bias) b[t] = v;
  return m;
}

// Constant mean box (0, 0, 0.5, 0.5): a 16x16 px centered crop, m = 4.
FovPolicy zero_policy() {
  FovPolicy p(fovr::testing::tiny_fov_config(), 1);
  for (std::size_t i = 0; i < p.params().size(); ++i)
    for (double& v : p.params()[i].value.data()) v = 0.0;
  return p;
}

// Constant mean box (0, 0, 1, 1): a 32x32 px centered crop, m = 16.
FovPolicy full_size_policy() {
  FovPolicy p = zero_policy();
  p.params()[p.layout().c2].value[2] = 1e4;
  p.params()[p.layout().c2].value[3] = 1e4;
  return p;
}

std::vector<env::Episode> mixed_episodes(std::size_t n) {
  std::vector<env::Episode> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(env::generate_episode(50 + i, i % 2 ? env::TaskKind::compare : env::TaskKind::identify));
  return out;
}

void check_trajectory_invariants(const Trajectory& t, const DecodeConfig& cfg) {
  CHECK(static_cast<int>(t.tokens.size()) <= cfg.t_max);
  CHECK(static_cast<int>(t.fov_steps.size()) <= cfg.k_max);
  std::size_t fov_tokens = 0;
  for (std::size_t i = 0; i < t.tokens.size(); ++i) {
    CHECK(t.tokens[i].token != tok::kFovClose);
    if (t.tokens[i].token == tok::kFovOpen) {
      REQUIRE(fov_tokens < t.fov_steps.size());
      CHECK(t.fov_steps[fov_tokens].token_index == i);
      ++fov_tokens;
    }
    if (fov_tokens >= static_cast<std::size_t>(cfg.k_max) && i + 1 < t.tokens.size()) {
      CHECK(t.tokens[i + 1].fov_masked);
    }
  }
  CHECK(fov_tokens == t.fov_steps.size());
  // Each </fov> closes an evidence block opened m entries earlier.
  std::size_t k = 0;
  for (std::size_t i = t.prompt_size; i < t.entries.size(); ++i) {
    const auto& e = t.entries[i];
    if (e.kind == EntryKind::text && e.token == tok::kFovClose) {
      REQUIRE(k < t.fov_steps.size());
      const std::size_t m = static_cast<std::size_t>(t.fov_steps[k].block.m());
      REQUIRE(i >= m + 1);
      CHECK(t.entries[i - m - 1].token == tok::kFovOpen);
      for (std::size_t j = i - m; j < i; ++j) CHECK(t.entries[j].kind == EntryKind::visual);
      ++k;
    }
  }
  CHECK(k == t.fov_steps.size());
  for (std::size_t i = 0; i < t.entries.size(); ++i) CHECK(t.entries[i].position_id == static_cast<int>(i));
  const std::size_t bound = t.prompt_size + static_cast<std::size_t>(cfg.t_max) +
                            static_cast<std::size_t>(cfg.k_max) * (16 * 16 + 2);
  CHECK(t.entries.size() <= bound);
}

}  // namespace

TEST_CASE("config validation and override parsing") {
  DecodeConfig c;
  CHECK_NOTHROW(c.validate());
  c.t_max = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = DecodeConfig{};
  c.k_max = -1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = DecodeConfig{};
  c.interventions.center = parse_box_override("fixed:1.5,0");
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = DecodeConfig{};
  c.interventions.size = parse_box_override("fixed:0.05,0.5");
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  CHECK(parse_box_override("learned").mode == OverrideMode::learned);
  CHECK(parse_box_override("random").mode == OverrideMode::random);
  const BoxOverride f = parse_box_override("fixed:0.25,-0.5");
  CHECK(f == BoxOverride{OverrideMode::fixed, 0.25, -0.5});
  CHECK(parse_box_override(to_string(f)) == f);
  CHECK_THROWS_AS(parse_box_override("fixed:0.2"), std::invalid_argument);
  CHECK_THROWS_AS(parse_box_override("fixed:a,b"), std::invalid_argument);
  CHECK_THROWS_AS(parse_box_override("center"), std::invalid_argument);
}

TEST_CASE("zero foveation budget yields empty statistics") {
  const TransformerModel model = biased_model({{tok::kFovOpen, 5.0}});
  const FovPolicy policy = zero_policy();
  DecodeConfig cfg;
  cfg.k_max = 0;
  cfg.t_max = 30;
  const env::Episode ep = env::generate_episode(1, env::TaskKind::identify);
  const Trajectory t = decode(model, policy, ep, cfg, 4);
  CHECK(t.fov_steps.empty());
  CHECK(t.stats == TrajectoryStats{0, 0, 0.0});
  for (const auto& s : t.tokens) CHECK(s.fov_masked);
  check_trajectory_invariants(t, cfg);
}

TEST_CASE("an always-foveating policy stops exactly at the budget") {
  const TransformerModel model = biased_model({{tok::kFovOpen, 1e3}, {tok::kThinkOpen, 10.0}});
  const FovPolicy policy = zero_policy();
  const env::Episode ep = env::generate_episode(2, env::TaskKind::identify);
  for (int k_max : {0, 1, 2, 4}) {
    DecodeConfig cfg;
    cfg.k_max = k_max;
    cfg.t_max = 12;
    cfg.temperature = 0.0;
    const Trajectory t = decode(model, policy, ep, cfg, 0);
    // Simulation oracle: k_max <fov> actions, then the best unmasked token
    // until the length cap.
    std::vector<TokenId> expect(static_cast<std::size_t>(k_max), tok::kFovOpen);
    while (expect.size() < 12) expect.push_back(tok::kThinkOpen);
    CHECK(t.token_ids() == expect);
    CHECK(t.terminal == Terminal::length_cap);
    CHECK(static_cast<int>(t.fov_steps.size()) == k_max);
    CHECK(t.stats.t_fov == k_max);
    CHECK(t.stats.n_fov == 4 * k_max);
    CHECK(t.stats.rho == doctest::Approx(k_max ? 1.0 / 16.0 : 0.0));
    check_trajectory_invariants(t, cfg);
  }
}

TEST_CASE("eos terminates decoding") {
  const TransformerModel model = biased_model({{tok::kEos, 50.0}});
  DecodeConfig cfg;
  cfg.temperature = 0.0;
  const Trajectory t = decode(model, zero_policy(), env::generate_episode(3, env::TaskKind::identify), cfg, 0);
  CHECK(t.terminal == Terminal::eos);
  CHECK(t.token_ids() == std::vector<TokenId>{tok::kEos});
}

TEST_CASE("masked decoding reduces to plain autoregressive decoding") {
  // Oracle: recompute the whole sequence every step without a cache and
  // take the argmax with <fov> suppressed.
  const TransformerModel model(fovr::testing::tiny_model_config(), 21);
  const FovPolicy policy(fovr::testing::tiny_fov_config(), 22);
  for (std::uint64_t s : {5ull, 6ull}) {
    const env::Episode ep = env::generate_episode(s, env::TaskKind::compare);
    DecodeConfig cfg;
    cfg.temperature = 0.0;
    cfg.t_max = 20;
    cfg.interventions.mask_fov = true;
    const Trajectory t = decode(model, policy, ep, cfg, 0);

    std::vector<MemoryEntry> seq = initial_observation(ep, 8);
    std::vector<TokenId> expect;
    while (expect.size() < 20) {
      const Array logits = model.full_logits(with_positions(seq));
      std::vector<double> row(logits.cols());
      for (std::size_t c = 0; c < row.size(); ++c) row[c] = logits.at(seq.size() - 1, c);
      for (TokenId c : {tok::kFovOpen, tok::kFovClose, tok::kPad}) row[c] = -INFINITY;
      const auto y = static_cast<TokenId>(std::max_element(row.begin(), row.end()) - row.begin());
      expect.push_back(y);
      if (y == tok::kEos) break;
      seq.push_back(MemoryEntry::text_token(y));
    }
    CHECK(t.token_ids() == expect);
    CHECK(t.fov_steps.empty());
  }
}

TEST_CASE("recorded token log-probs match a recompute") {
  const TransformerModel model = biased_model({{tok::kFovOpen, 2.0}}, 8);
  const FovPolicy policy(fovr::testing::tiny_fov_config(), 9);
  DecodeConfig cfg;
  cfg.t_max = 25;
  cfg.sample_boxes = true;
  const env::Episode ep = env::generate_episode(7, env::TaskKind::compare);
  const Trajectory t = decode(model, policy, ep, cfg, 31);
  const Array logits = model.full_logits(t.entries);
  for (const auto& s : t.tokens) {
    if (s.token == tok::kEos) continue;
    std::vector<double> row(logits.cols()), lp(logits.cols());
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = logits.at(s.entry - 1, c);
    for (std::size_t c : masked_columns(s.fov_masked)) row[c] = std::numeric_limits<double>::lowest();
    CHECK(masked_columns(s.fov_masked).size() == (s.fov_masked ? 3u : 2u));
    kernels::log_softmax(row, lp);
    CHECK(s.log_prob == doctest::Approx(lp[s.token]).epsilon(1e-10));
    CHECK(t.entries[s.entry].token == s.token);
  }
  for (const auto& f : t.fov_steps) {
    CHECK(f.sample.log_prob == doctest::Approx(policy.get_log_prob(f.h, f.sample.raw).first).epsilon(1e-12));
    CHECK(env::is_valid(f.sample.box));
  }
  check_trajectory_invariants(t, cfg);
}

TEST_CASE("batched decoding equals sequential decoding") {
  const TransformerModel model = [] {
    ModelConfig c = fovr::testing::tiny_model_config();
    c.max_pos = 512;
    TransformerModel m(c, 41);
    m.params()[m.layout().head_b].value[tok::kFovOpen] += 2.5;
    return m;
  }();
  const FovPolicy policy(fovr::testing::tiny_fov_config(), 42);
  const auto eps = mixed_episodes(8);
  for (double temperature : {0.0, 1.0}) {
    DecodeConfig cfg;
    cfg.t_max = 24;
    cfg.temperature = temperature;
    cfg.sample_boxes = temperature > 0.0;
    const auto batch = decode_batch(model, policy, eps, cfg, 77);
    REQUIRE(batch.size() == eps.size());
    int foveated = 0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const Trajectory solo = decode(model, policy, eps[i], cfg, sample_seed(77, i));
      CHECK(batch[i].token_ids() == solo.token_ids());
      CHECK(batch[i].entries == solo.entries);
      CHECK(batch[i].stats == solo.stats);
      for (std::size_t k = 0; k < solo.tokens.size(); ++k)
        CHECK(batch[i].tokens[k].log_prob == doctest::Approx(solo.tokens[k].log_prob).epsilon(1e-9));
      foveated += solo.stats.t_fov > 0;
      check_trajectory_invariants(batch[i], cfg);
    }
    CHECK(foveated > 0);
  }
  DecodeConfig cfg;
  const auto one = decode_batch(model, policy, {eps[0]}, cfg, 5);
  CHECK(one[0].token_ids() == decode(model, policy, eps[0], cfg, 5).token_ids());
  CHECK_THROWS_AS(decode_batch(model, policy, {}, cfg, 0), std::invalid_argument);
}

TEST_CASE("batch block lengths are equalized by left padding") {
  // Two equally likely actions; find a seed where sample 0 foveates and
  // sample 1 emits text on the first step.
  const TransformerModel model = biased_model({{tok::kFovOpen, 20.0}, {tok::kThinkOpen, 20.0}});
  const FovPolicy policy = full_size_policy();
  const auto eps = mixed_episodes(2);
  DecodeConfig cfg;
  cfg.t_max = 1;
  std::uint64_t seed = 0;
  for (;; ++seed) {
    const auto a = decode(model, policy, eps[0], cfg, sample_seed(seed, 0));
    const auto b = decode(model, policy, eps[1], cfg, sample_seed(seed, 1));
    if (a.tokens[0].token == tok::kFovOpen && b.tokens[0].token == tok::kThinkOpen) break;
    REQUIRE(seed < 200);
  }
  cfg.t_max = 6;
  std::vector<BatchStep> log;
  const auto out = decode_batch(model, policy, eps, cfg, seed, &log);
  REQUIRE(log.size() >= 2);
  const std::size_t prompt = out[0].prompt_size;
  CHECK(log[0].block == std::vector<std::size_t>{prompt, out[1].prompt_size});
  CHECK(out[0].fov_steps[0].block.m() == 16);
  CHECK(log[1].block == std::vector<std::size_t>{18, 1});
  CHECK(log[1].pads == std::vector<std::size_t>{0, 17});
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(out[i].token_ids() == decode(model, policy, eps[i], cfg, sample_seed(seed, i)).token_ids());
    std::size_t blocks = 0;
    for (const auto& s : log) blocks += s.block[i];
    CHECK(blocks == out[i].entries.size());
  }
}

TEST_CASE("interventions") {
  const TransformerModel model = biased_model({{tok::kFovOpen, 1e3}, {tok::kThinkOpen, 1.0}});
  const FovPolicy policy(fovr::testing::tiny_fov_config(), 5);
  const env::Episode ep = env::generate_episode(9, env::TaskKind::compare);
  DecodeConfig cfg;
  cfg.t_max = 8;
  cfg.temperature = 0.0;

  SUBCASE("fov cap") {
    for (int cap : {0, 1, 3}) {
      cfg.interventions.fov_cap = cap;
      const Trajectory t = decode(model, policy, ep, cfg, 0);
      CHECK(t.stats.t_fov == cap);
    }
  }
  SUBCASE("fixed center and size") {
    cfg.interventions.center = {OverrideMode::fixed, 0.5, -0.5};
    cfg.interventions.size = {OverrideMode::fixed, 0.25, 0.25};
    const Trajectory t = decode(model, policy, ep, cfg, 0);
    REQUIRE(t.fov_steps.size() == 4);
    for (const auto& f : t.fov_steps) CHECK(f.sample.box == env::BoxAction{0.5, -0.5, 0.25, 0.25});
    // An 8x8 px box at pixel (48,16) snaps outward to 2x2 patches.
    CHECK(t.stats.n_fov == 16);
    CHECK(t.stats.rho == doctest::Approx(1.0 / 16.0));
  }
  SUBCASE("random center and size") {
    cfg.interventions.center.mode = OverrideMode::random;
    cfg.interventions.size.mode = OverrideMode::random;
    const Trajectory t = decode(model, policy, ep, cfg, 3);
    REQUIRE(t.fov_steps.size() == 4);
    CHECK(t.fov_steps[0].sample.box != t.fov_steps[1].sample.box);
    for (const auto& f : t.fov_steps) CHECK(env::is_valid(f.sample.box));
    CHECK(decode(model, policy, ep, cfg, 3).stats == t.stats);
  }
}

TEST_CASE("statistics examples") {
  const env::Episode ep = env::generate_episode(1, env::TaskKind::identify);
  auto step = [&](env::BoxAction b) {
    FovStep f;
    f.sample.box = b;
    f.block = env::crop_tokenize(ep.high_res, b);
    return f;
  };
  Trajectory t;
  CHECK(compute_stats(t, ep) == TrajectoryStats{0, 0, 0.0});
  t.fov_steps = {step({0, 0, 1, 1}), step({0, 0, 1, 1})};
  const TrajectoryStats same = compute_stats(t, ep);
  CHECK(same.n_fov == 32);
  CHECK(same.t_fov == 2);
  CHECK(same.rho == doctest::Approx(0.25));

  // Rasterized union oracle on the pixel grid.
  t.fov_steps = {step({-0.5, -0.5, 1, 1}), step({0.5, 0.5, 1, 1}), step({0.3, 0.1, 0.7, 0.4})};
  std::vector<std::uint8_t> lit(64 * 64, 0);
  for (const auto& f : t.fov_steps) {
    const auto& r = f.block.source_rect;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (x + 0.5 > r.x0 && x + 0.5 < r.x1 && y + 0.5 > r.y0 && y + 0.5 < r.y1) lit[y * 64 + x] = 1;
  }
  const double expect = static_cast<double>(std::count(lit.begin(), lit.end(), 1)) / (64.0 * 64.0);
  CHECK(compute_stats(t, ep).rho == doctest::Approx(expect).epsilon(1e-12));
  t.fov_steps.pop_back();
  CHECK(compute_stats(t, ep).rho == doctest::Approx(0.5));
  CHECK(compute_stats(t, ep).n_fov == 32);
}

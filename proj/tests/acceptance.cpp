// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion A-K.
//
//   fovr_acceptance [--work DIR] [CRITERIA...]
//
// CRITERIA is any subset of the letters A-K (default: all). G, H and I share
// one training pipeline (data, coldstart, three RL runs) whose artifacts are
// written under DIR.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "fovr/coldstart.hpp"
#include "fovr/config.hpp"
#include "fovr/decode.hpp"
#include "fovr/grpo.hpp"
#include "fovr/io.hpp"
#include "fovr/kernels.hpp"
#include "fovr/report.hpp"
#include "fovr/train.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace fovr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

void log(const std::string& msg) { std::cerr << "[acceptance] " << msg << std::endl; }

// Default-size model with extra <fov> preference so unmasked decodes foveate.
TransformerModel eager_model(std::uint64_t seed, double fov_bias) {
  TransformerModel m(ModelConfig{}, seed);
  m.params()[m.layout().head_b].value[tok::kFovOpen] += fov_bias;
  return m;
}

std::vector<env::Episode> mixed_episodes(std::size_t n, std::uint64_t base) {
  std::vector<env::Episode> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(env::generate_episode(base + i, i % 2 ? env::TaskKind::compare : env::TaskKind::identify));
  return out;
}

// ------------------------------------------------------------------ A

// Plain cached autoregressive decode over the vocabulary without <fov>.
std::vector<TokenId> reference_decode(const TransformerModel& model, const env::Episode& ep, int t_max) {
  Memory mem(model.config());
  std::vector<MemoryEntry> next = initial_observation(ep, model.config().patch);
  std::vector<TokenId> out;
  while (static_cast<int>(out.size()) < t_max) {
    std::vector<double> logits = model.forward_step(mem, next).logits;
    for (TokenId c : {tok::kFovOpen, tok::kFovClose, tok::kPad}) logits[c] = -INFINITY;
    const auto y = static_cast<TokenId>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    out.push_back(y);
    if (y == tok::kEos) break;
    next = {MemoryEntry::text_token(y)};
  }
  return out;
}

Outcome criterion_a() {
  const TransformerModel model = eager_model(101, 3.0);
  const FovPolicy policy(FovPolicyConfig{}, 102);
  DecodeConfig cfg;
  cfg.temperature = 0.0;
  cfg.interventions.mask_fov = true;
  DecodeConfig open = cfg;
  open.interventions.mask_fov = false;
  int same = 0, would_foveate = 0;
  const auto eps = mixed_episodes(100, 5000);
  for (const auto& ep : eps) {
    const Trajectory t = decode(model, policy, ep, cfg, 0);
    same += t.token_ids() == reference_decode(model, ep, cfg.t_max) && t.fov_steps.empty();
    would_foveate += decode(model, policy, ep, open, 0).stats.t_fov > 0;
  }
  return {same == 100, std::to_string(same) + "/100 masked greedy decodes equal the plain AR reference (" +
                           std::to_string(would_foveate) + "/100 foveate when unmasked)"};
}

// ------------------------------------------------------------------ B

struct GroupFixture {
  TransformerModel model, ref;
  FovPolicy policy;
  env::Episode episode;
  RewardedGroup group;
};

GroupFixture group_fixture(std::size_t fov_mid) {
  ModelConfig mc = fovr::testing::tiny_model_config();
  mc.max_pos = 512;
  TransformerModel model(mc, 31);
  model.params()[model.layout().head_b].value[tok::kFovOpen] += 4.0;
  FovPolicyConfig fc = fovr::testing::tiny_fov_config();
  fc.hidden_mid = fov_mid;
  GroupFixture f{model, model, FovPolicy(fc, 7), env::generate_episode(17, env::TaskKind::compare), {}};
  Rng rng(3);
  for (std::size_t p = 0; p < f.ref.params().size(); ++p)
    for (double& v : f.ref.params()[p].value.data()) v += 0.05 * rng.normal();
  DecodeConfig cfg;
  cfg.t_max = 14;
  cfg.sample_boxes = true;
  std::vector<Trajectory> trajs;
  for (std::size_t i = 0; i < 4; ++i) trajs.push_back(decode(f.model, f.policy, f.episode, cfg, sample_seed(5, i)));
  f.group = make_group(f.episode, std::move(trajs));
  f.group.rewards = {{1, 1}, {0, 1}, {0, 0}, {1, 0}};
  f.group.adv = advantages(f.group.rewards);
  return f;
}

Outcome criterion_b() {
  std::vector<std::string> parts;
  bool ok = true;
  auto record = [&](const std::string& name, const fovr::testing::CoordCheck& c) {
    ok = ok && c.checked >= 200 && c.worst < 1e-4;
    parts.push_back(name + " " + std::to_string(c.checked) + " coords, worst " + fmt(c.worst, 2));
  };
  {
    TransformerModel model(fovr::testing::tiny_model_config(), 8);
    FovPolicy policy(fovr::testing::tiny_fov_config(), 9);
    const TargetSequence t = build_target(env::generate_episode(8, env::TaskKind::compare), RationaleMode::interleaved);
    auto loss = [&](ParamBinder& mb, ParamBinder& fb) { return coldstart_loss(mb, fb, model, policy, t, {}).total; };
    record("coldstart", fovr::testing::check_store_gradients(model, policy, loss, 200, 200, 11));
  }
  GroupFixture f = group_fixture(32);
  Rng rng(12);
  std::size_t fovs = 0;
  for (auto& t : f.group.trajectories) {
    for (auto& s : t.tokens) s.log_prob += rng.uniform(-0.05, 0.05);
    for (auto& st : t.fov_steps) st.sample.log_prob += rng.uniform(-0.5, 0.5);
    fovs += t.fov_steps.size();
  }
  ok = ok && fovs > 0;
  auto tok = [&](ParamBinder& mb, ParamBinder&) { return grpo_token_loss(mb, f.model, f.ref, f.group, {}).loss; };
  record("token", fovr::testing::check_store_gradients(f.model, f.policy, tok, 200, 0, 21));
  auto fov = [&](ParamBinder&, ParamBinder& fb) { return grpo_fov_loss(fb, f.policy, f.group); };
  record("fov", fovr::testing::check_store_gradients(f.model, f.policy, fov, 0, 200, 22));
  auto reg = [&](ParamBinder&, ParamBinder& fb) { return region_reg_loss(fb, f.policy, f.group); };
  record("reg", fovr::testing::check_store_gradients(f.model, f.policy, reg, 0, 200, 23));
  // A vanishing gradient would pass the comparison trivially.
  auto grad_scale = [&](const fovr::testing::StoreLoss& loss) {
    Graph g;
    ParamBinder mb(g, f.model.params()), fb(g, f.policy.params());
    g.backward(loss(mb, fb));
    GradStore mg(f.model.params()), fg(f.policy.params());
    mb.accumulate(mg);
    fb.accumulate(fg);
    return std::max(mg.max_abs(), fg.max_abs());
  };
  const double scales[] = {grad_scale(tok), grad_scale(fov), grad_scale(reg)};
  for (double s : scales) ok = ok && s > 0.0;
  std::string detail;
  for (const auto& p : parts) detail += (detail.empty() ? "" : "; ") + p;
  detail += "; max |grad| tok/fov/reg " + fmt(scales[0], 2) + "/" + fmt(scales[1], 2) + "/" + fmt(scales[2], 2);
  return {ok, detail};
}

// ------------------------------------------------------------------ C

Outcome criterion_c() {
  const TransformerModel model = eager_model(201, 2.5);
  const FovPolicy policy(FovPolicyConfig{}, 202);
  const auto eps = mixed_episodes(8, 7000);
  DecodeConfig cfg;
  cfg.temperature = 0.0;
  const auto batch = decode_batch(model, policy, eps, cfg, 13);
  int equal = 0, fov_steps = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const Trajectory solo = decode(model, policy, eps[i], cfg, sample_seed(13, i));
    bool same = batch[i].token_ids() == solo.token_ids() && batch[i].fov_steps.size() == solo.fov_steps.size();
    for (std::size_t k = 0; same && k < solo.fov_steps.size(); ++k) {
      same = batch[i].fov_steps[k].sample.box == solo.fov_steps[k].sample.box &&
             batch[i].fov_steps[k].block.patches == solo.fov_steps[k].block.patches;
    }
    equal += same;
    fov_steps += static_cast<int>(solo.fov_steps.size());
  }
  return {equal == 8, std::to_string(equal) + "/8 batched trajectories identical to sequential (" +
                          std::to_string(fov_steps) + " foveation steps)"};
}

// ------------------------------------------------------------------ D

Outcome criterion_d() {
  const FovPolicy policy(FovPolicyConfig{}, 303);
  const double peak = 4.0 * -std::log(0.1 * std::sqrt(2.0 * M_PI));
  double worst_peak = 0.0, worst_offset = 0.0;
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Array h = fovr::testing::random_array({64}, rng, 2.0);
    const Box4 mean = to_array(policy.mean_box(h));
    const double lp = policy.get_log_prob(h, mean).first;
    worst_peak = std::max(worst_peak, std::fabs(lp - peak));
    for (std::size_t k = 0; k < 4; ++k) {
      for (double sign : {1.0, -1.0}) {
        Box4 off = mean;
        off[k] += sign * 0.1;
        worst_offset = std::max(worst_offset, std::fabs(lp - policy.get_log_prob(h, off).first - 0.5));
      }
    }
  }
  return {worst_peak < 1e-9 && worst_offset < 1e-9,
          "peak " + fmt(peak, 10) + ", worst peak error " + fmt(worst_peak, 2) + ", worst one-sigma error " +
              fmt(worst_offset, 2)};
}

// ------------------------------------------------------------------ E

double token_loss_value(GroupFixture& f, const RewardedGroup& g, const RlConfig& cfg) {
  Graph graph;
  ParamBinder b(graph, f.model.params());
  return graph.value(grpo_token_loss(b, f.model, f.ref, g, cfg).loss).item();
}

double fov_loss_value(GroupFixture& f, const RewardedGroup& g) {
  Graph graph;
  ParamBinder b(graph, f.policy.params());
  return graph.value(grpo_fov_loss(b, f.policy, g)).item();
}

Outcome criterion_e() {
  Rng rng(5);
  double worst_sum = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Rewards> r(2 + rng.below(15));
    for (auto& x : r) x = {rng.uniform() < 0.5 ? 1.0 : 0.0, rng.uniform() < 0.5 ? 1.0 : 0.0};
    const Advantages a = advantages(r);
    double s = 0.0, sa = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      s += a.a[i];
      sa += a.a_acc[i];
    }
    worst_sum = std::max({worst_sum, std::fabs(s), std::fabs(sa)});
  }
  double min_kl = INFINITY;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(16), q(16), lp(16), lq(16);
    for (std::size_t i = 0; i < 16; ++i) {
      p[i] = rng.uniform(-8.0, 8.0);
      q[i] = rng.uniform(-8.0, 8.0);
    }
    kernels::log_softmax(p, lp);
    kernels::log_softmax(q, lq);
    for (std::size_t i = 0; i < 16; ++i) min_kl = std::min(min_kl, kl_estimate(lp[i], lq[i]));
  }

  GroupFixture f = group_fixture(4);
  RlConfig no_kl;
  no_kl.beta = 0.0;
  auto clip_case = [&](double pos, double neg) {
    RewardedGroup g = f.group;
    g.adv.a = {1.0, -1.0, 0.0, 0.0};
    for (auto& s : g.trajectories[0].tokens) s.log_prob -= std::log(pos);
    for (auto& s : g.trajectories[1].tokens) s.log_prob -= std::log(neg);
    return token_loss_value(f, g, no_kl);
  };
  const double base = clip_case(2.0, 0.5);
  const bool clip_ok = clip_case(3.0, 0.5) == base && clip_case(2.0, 0.3) == base && clip_case(10.0, 0.01) == base;

  const double tok0 = token_loss_value(f, f.group, {}), fov0 = fov_loss_value(f, f.group);
  RewardedGroup shifted = f.group;
  for (auto& r : shifted.rewards) {
    r.acc += 2.5;
    r.fmt -= 1.0;
  }
  shifted.adv = advantages(shifted.rewards);
  const double dtok = std::fabs(token_loss_value(f, shifted, {}) - tok0);
  const double dfov = std::fabs(fov_loss_value(f, shifted) - fov0);

  const bool ok = worst_sum < 1e-12 && min_kl >= 0.0 && clip_ok && dtok < 1e-10 && dfov < 1e-10;
  return {ok, "max |sum A| " + fmt(worst_sum, 2) + ", min KL " + fmt(min_kl, 2) + ", clip band " +
                  (clip_ok ? "flat" : "NOT flat") + ", shift deltas " + fmt(dtok, 2) + "/" + fmt(dfov, 2)};
}

// ------------------------------------------------------------------ F

Outcome criterion_f() {
  GroupFixture f = group_fixture(4);
  std::size_t with_fov = 0;
  while (with_fov < 4 && f.group.trajectories[with_fov].fov_steps.empty()) ++with_fov;
  if (with_fov == 4) return {false, "fixture produced no foveation"};
  auto eval = [&](std::vector<Rewards> r) {
    f.group.rewards = std::move(r);
    f.group.adv = advantages(f.group.rewards);
    Graph g;
    ParamBinder b(g, f.policy.params());
    const NodeId loss = region_reg_loss(b, f.policy, f.group);
    g.backward(loss);
    GradStore gs(f.policy.params());
    b.accumulate(gs);
    return std::pair{g.value(loss).item(), gs.max_abs()};
  };
  const auto [v0, g0] = eval(std::vector<Rewards>(4, Rewards{0.0, 1.0}));
  std::vector<Rewards> one(4, Rewards{0.0, 1.0});
  one[with_fov].acc = 1.0;
  const auto [v1, g1] = eval(one);
  return {g0 == 0.0 && v0 == 0.0 && v1 > 0.0 && g1 > 0.0,
          "all-incorrect: value " + fmt(v0) + ", max |grad| " + fmt(g0) + "; one correct: value " + fmt(v1) +
              ", max |grad| " + fmt(g1)};
}

// ------------------------------------------------------------------ G, H, I

class Pipeline {
 public:
  explicit Pipeline(fs::path work) : work_(std::move(work)) { fs::create_directories(work_); }

  const RunConfig& config() const { return cfg_; }
  const fs::path& work() const { return work_; }

  const io::Dataset& train() {
    ensure_data();
    return train_;
  }
  const io::Dataset& eval() {
    ensure_data();
    return eval_;
  }

  const io::Checkpoint& coldstart() {
    if (coldstart_) return *coldstart_;
    ensure_data();
    log("coldstart: " + std::to_string(train_.episodes.size()) + " episodes x " +
        std::to_string(cfg_.coldstart.epochs) + " epochs");
    std::vector<TargetSequence> targets;
    for (const auto& ep : train_.episodes) targets.push_back(build_target(ep, cfg_.data.rationale));
    TransformerModel model(cfg_.model, cfg_.model_seed ^ cfg_.seed);
    FovPolicy policy(cfg_.fov, cfg_.fov_seed ^ cfg_.seed);
    MetricsWriter w(work_ / "coldstart_metrics.csv", cfg_.seed, cfg_.items());
    const auto s = train_coldstart(model, policy, targets, cfg_.coldstart, cfg_.seed,
                                   [&](const MetricsRow& r) { w.append(r); });
    log("coldstart loss " + fmt(s.first_loss) + " -> " + fmt(s.last_loss));
    const fs::path path = work_ / "coldstart.ckpt";
    io::save_checkpoint(path, io::make_checkpoint(model, policy));
    coldstart_ = io::load_checkpoint(path);
    return *coldstart_;
  }

  const io::Checkpoint& rl(double lambda_reg) {
    const auto it = rl_.find(lambda_reg);
    if (it != rl_.end()) return it->second;
    const io::Checkpoint& init = coldstart();
    RunConfig cfg = cfg_;
    cfg.rl.loss.lambda_reg = lambda_reg;
    log("rl: lambda_reg = " + fmt(lambda_reg) + ", " + std::to_string(cfg.rl.steps) + " groups of " +
        std::to_string(cfg.rl.loss.group_size));
    const TransformerModel ref = io::model_from(init);
    TransformerModel model = io::model_from(init);
    FovPolicy policy = io::policy_from(init);
    const std::string tag = "rl_lambda" + fmt(lambda_reg);
    MetricsWriter w(work_ / (tag + "_metrics.csv"), cfg.seed, cfg.items());
    const auto s = train_rl(model, policy, ref, train_.episodes, cfg.rl, cfg.rollout_decode(), cfg.seed,
                            [&](const MetricsRow& r) { w.append(r); });
    log("rl: mean rollout accuracy " + fmt(s.acc_mean) + ", tail rho " + fmt(s.rho_tail));
    const fs::path path = work_ / (tag + ".ckpt");
    io::save_checkpoint(path, io::make_checkpoint(model, policy));
    return rl_.emplace(lambda_reg, io::load_checkpoint(path)).first->second;
  }

  EvalReport evaluate_on(const io::Checkpoint& ck, const Interventions& iv, std::size_t limit = 0) {
    ensure_data();
    DecodeConfig dc = cfg_.eval_decode();
    dc.interventions = iv;
    std::vector<env::Episode> eps = eval_.episodes;
    if (limit && eps.size() > limit) eps.resize(limit);
    return evaluate(io::model_from(ck), io::policy_from(ck), eps, dc, cfg_.seed);
  }

 private:
  void ensure_data() {
    if (have_data_) return;
    const auto train = make_split(cfg_.data.train_count, cfg_.data.train_seed ^ cfg_.seed, cfg_.data.identify_fraction,
                                  cfg_.env);
    const auto eval = make_split(cfg_.data.eval_count, cfg_.data.eval_seed ^ cfg_.seed,
                                 cfg_.data.eval_identify_fraction, cfg_.env);
    io::Dataset t{io::kDatasetVersionWithTargets, train, {}};
    for (const auto& ep : train) t.layouts.push_back(io::layout_of(build_target(ep, cfg_.data.rationale)));
    io::write_dataset(work_ / "train.fove", t);
    io::write_dataset(work_ / "eval.fove", io::Dataset{io::kDatasetVersion, eval, {}});
    train_ = io::read_dataset(work_ / "train.fove");
    eval_ = io::read_dataset(work_ / "eval.fove");
    have_data_ = true;
  }

  fs::path work_;
  RunConfig cfg_;
  bool have_data_ = false;
  io::Dataset train_, eval_;
  std::optional<io::Checkpoint> coldstart_;
  std::map<double, io::Checkpoint> rl_;
};

std::string describe_report(const std::string& name, const EvalReport& r) {
  return name + " acc " + fmt(r.accuracy, 3) + " rho " + fmt(r.rho.mean, 3);
}

Outcome criterion_g(Pipeline& p) {
  Interventions masked;
  masked.mask_fov = true;
  const EvalReport base = p.evaluate_on(p.coldstart(), masked);
  const EvalReport cold = p.evaluate_on(p.coldstart(), {});
  const EvalReport rl = p.evaluate_on(p.rl(p.config().rl.loss.lambda_reg), {});
  const bool ok = base.accuracy <= 0.15 && cold.accuracy >= 0.60 && rl.accuracy >= 0.80 && rl.rho.mean <= 0.30;
  return {ok, describe_report("(i) fov-masked", base) + "; " + describe_report("(ii) coldstart", cold) + "; " +
                  describe_report("(iii) rl", rl) + " on " + std::to_string(rl.count) + " identify episodes"};
}

Outcome criterion_h(Pipeline& p) {
  std::vector<std::pair<double, double>> rho;
  for (double lambda : {1.0, 0.2, 0.0}) rho.emplace_back(lambda, p.evaluate_on(p.rl(lambda), {}).rho.mean);
  const bool ok = rho[0].second <= rho[1].second && rho[1].second <= rho[2].second;
  std::string detail = "eval rho by lambda_reg:";
  for (const auto& [l, r] : rho) detail += " " + fmt(l) + "->" + fmt(r, 5);
  return {ok, detail};
}

Outcome criterion_i(Pipeline& p) {
  const io::Checkpoint& ck = p.rl(p.config().rl.loss.lambda_reg);
  Interventions random_center, random_size;
  random_center.center.mode = OverrideMode::random;
  random_size.size.mode = OverrideMode::random;
  const double learned = p.evaluate_on(ck, {}, 500).accuracy;
  const double rc = p.evaluate_on(ck, random_center, 500).accuracy;
  const double rs = p.evaluate_on(ck, random_size, 500).accuracy;
  return {learned >= rc && learned >= rs, "500 identify episodes: learned " + fmt(learned, 3) + ", random center " +
                                              fmt(rc, 3) + ", random size " + fmt(rs, 3)};
}

// ------------------------------------------------------------------ J

Outcome criterion_j() {
  ModelConfig mc = fovr::testing::tiny_model_config();
  mc.max_pos = 1024;
  TransformerModel model(mc, 401);
  model.params()[model.layout().head_b].value[tok::kFovOpen] = 1e3;
  const FovPolicy policy(fovr::testing::tiny_fov_config(), 402);
  DecodeConfig cfg;
  cfg.t_max = 32;
  cfg.k_max = 4;
  cfg.sample_boxes = true;
  int violations = 0, at_budget = 0;
  for (int i = 0; i < 10000; ++i) {
    const env::Episode ep = env::generate_episode(static_cast<std::uint64_t>(i), i % 2 ? env::TaskKind::compare
                                                                                       : env::TaskKind::identify);
    const Trajectory t = decode(model, policy, ep, cfg, static_cast<std::uint64_t>(i) * 7919u);
    const bool ok = static_cast<int>(t.fov_steps.size()) <= cfg.k_max && static_cast<int>(t.tokens.size()) <= cfg.t_max;
    violations += !ok;
    at_budget += static_cast<int>(t.fov_steps.size()) == cfg.k_max;
  }
  return {violations == 0, std::to_string(violations) + " violations in 10000 sampled decodes (" +
                               std::to_string(at_budget) + " reached K_max)"};
}

// ------------------------------------------------------------------ K

Outcome criterion_k(const fs::path& work) {
  fs::create_directories(work);
  TransformerModel model(ModelConfig{}, 501);
  FovPolicy policy(FovPolicyConfig{}, 502);
  const fs::path a = work / "k_a.ckpt", b = work / "k_b.ckpt";
  io::save_checkpoint(a, io::make_checkpoint(model, policy));
  io::save_checkpoint(b, io::load_checkpoint(a));
  const bool ckpt_ok = io::read_file(a) == io::read_file(b);

  io::Dataset d{io::kDatasetVersionWithTargets, make_split(500, 3, 0.75), {}};
  for (const auto& ep : d.episodes) d.layouts.push_back(io::layout_of(build_target(ep, RationaleMode::interleaved)));
  const fs::path dp = work / "k.fove";
  io::write_dataset(dp, d);
  const io::Dataset back = io::read_dataset(dp);
  const bool data_ok = back.episodes == d.episodes && back.layouts == d.layouts && io::encode_dataset(back) == io::read_file(dp);
  return {ckpt_ok && data_ok, std::string("checkpoint save/load/save ") + (ckpt_ok ? "byte-identical" : "DIFFERS") +
                                  "; 500-episode dataset " + (data_ok ? "record-exact" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fovr acceptance criteria"};
  std::string work = "acceptance_work";
  std::vector<std::string> selected;
  app.add_option("--work", work, "directory for pipeline artifacts");
  app.add_option("criteria", selected, "subset of A-K to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  std::string wanted;
  for (const auto& s : selected) wanted += s;
  if (wanted.empty()) wanted = "ABCDEFGHIJK";

  Pipeline pipeline{fs::path(work)};
  const std::vector<std::pair<char, std::function<Outcome()>>> criteria{
      {'A', criterion_a},
      {'B', criterion_b},
      {'C', criterion_c},
      {'D', criterion_d},
      {'E', criterion_e},
      {'F', criterion_f},
      {'G', [&] { return criterion_g(pipeline); }},
      {'H', [&] { return criterion_h(pipeline); }},
      {'I', [&] { return criterion_i(pipeline); }},
      {'J', criterion_j},
      {'K', [&] { return criterion_k(fs::path(work)); }},
  };
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (wanted.find(id) == std::string::npos) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << id << ": " << o.detail << " [" << fmt(secs, 3) << " s]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}

// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-line runner: gen-data, coldstart, rl, eval, trace.
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fovr/coldstart.hpp"
#include "fovr/config.hpp"
#include "fovr/io.hpp"
#include "fovr/report.hpp"
#include "fovr/train.hpp"

namespace fs = std::filesystem;
using namespace fovr;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string ckpt;
  std::string out = "run";
  std::optional<int> fov_cap;
  std::string center_mode = "learned";
  std::string size_mode = "learned";
  bool mask_fov = false;
  std::string task = "identify";
  bool plots = true;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  return cfg;
}

Interventions resolve_interventions(const Options& o) {
  Interventions iv;
  iv.fov_cap = o.fov_cap;
  iv.mask_fov = o.mask_fov;
  try {
    iv.center = parse_box_override(o.center_mode);
    iv.size = parse_box_override(o.size_mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return iv;
}

void log(const std::string& msg) { std::cerr << "[fovr] " << msg << std::endl; }

fs::path train_path(const fs::path& out) { return out / "train.fove"; }
fs::path eval_path(const fs::path& out) { return out / "eval.fove"; }

io::Checkpoint require_checkpoint(const Options& o) {
  if (o.ckpt.empty()) throw ConfigError("--ckpt is required");
  return io::load_checkpoint(o.ckpt);
}

StepCallback metrics_sink(MetricsWriter& writer, int log_every) {
  return [&writer, log_every](const MetricsRow& row) {
    writer.append(row);
    if (row.step % log_every == 0) log(row.stage + " step " + std::to_string(row.step) + ": " + format_metrics_row(row));
  };
}

void plot_metrics(const fs::path& csv, const fs::path& svg, const std::string& title) {
  const MetricsTable t = read_metrics(csv);
  const std::vector<std::string> columns = [] {
    std::vector<std::string> c;
    std::string s = kMetricsColumns, cur;
    for (char ch : s) {
      if (ch == ',') {
        c.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    c.push_back(cur);
    return c;
  }();
  std::vector<PlotSeries> series;
  for (std::size_t col = 2; col < columns.size(); ++col) {
    PlotSeries s{columns[col], {}, {}};
    for (const auto& row : t.rows) {
      if (col < row.size() && !row[col].empty()) {
        s.x.push_back(std::stod(row[0]));
        s.y.push_back(std::stod(row[col]));
      }
    }
    if (!s.x.empty()) series.push_back(std::move(s));
  }
  write_text(svg, line_plot_svg(title, "step", series));
}

int cmd_gen_data(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const fs::path out = o.out;
  const auto train = make_split(cfg.data.train_count, cfg.data.train_seed ^ cfg.seed, cfg.data.identify_fraction, cfg.env);
  const auto eval = make_split(cfg.data.eval_count, cfg.data.eval_seed ^ cfg.seed, cfg.data.eval_identify_fraction, cfg.env);
  io::Dataset train_set{io::kDatasetVersionWithTargets, train, {}};
  for (const auto& ep : train) train_set.layouts.push_back(io::layout_of(build_target(ep, cfg.data.rationale)));
  io::write_dataset(train_path(out), train_set);
  io::write_dataset(eval_path(out), io::Dataset{io::kDatasetVersion, eval, {}});
  log("wrote " + std::to_string(train.size()) + " train episodes to " + train_path(out).string());
  log("wrote " + std::to_string(eval.size()) + " eval episodes to " + eval_path(out).string());
  return 0;
}

int cmd_coldstart(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const fs::path out = o.out;
  const io::Dataset data = io::read_dataset(train_path(out));
  std::vector<TargetSequence> targets;
  for (std::size_t i = 0; i < data.episodes.size(); ++i) {
    TargetSequence t = build_target(data.episodes[i], cfg.data.rationale);
    if (!data.layouts.empty() && io::layout_of(t) != data.layouts[i]) {
      throw std::runtime_error("dataset target layout " + std::to_string(i) + " does not match the configured rationale");
    }
    targets.push_back(std::move(t));
  }
  TransformerModel model(cfg.model, cfg.model_seed ^ cfg.seed);
  FovPolicy policy(cfg.fov, cfg.fov_seed ^ cfg.seed);
  if (!o.ckpt.empty()) {
    const io::Checkpoint init = io::load_checkpoint(o.ckpt);
    model = io::model_from(init);
    policy = io::policy_from(init);
  }
  const fs::path ckpt = out / "coldstart.ckpt";
  MetricsWriter writer(out / "coldstart_metrics.csv", cfg.seed, cfg.items());
  try {
    const auto s = train_coldstart(model, policy, targets, cfg.coldstart, cfg.seed, metrics_sink(writer, cfg.log_every));
    log("coldstart finished after " + std::to_string(s.steps) + " steps, loss " + std::to_string(s.first_loss) +
        " -> " + std::to_string(s.last_loss));
  } catch (const NonFiniteLoss& e) {
    io::save_checkpoint(ckpt, io::make_checkpoint(model, policy));
    log(std::string(e.what()) + "; last good parameters saved to " + ckpt.string());
    return 2;
  }
  io::save_checkpoint(ckpt, io::make_checkpoint(model, policy));
  if (cfg.plots) plot_metrics(out / "coldstart_metrics.csv", out / "coldstart_metrics.svg", "coldstart");
  log("checkpoint written to " + ckpt.string());
  return 0;
}

int cmd_rl(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const fs::path out = o.out;
  const io::Checkpoint init = require_checkpoint(o);
  const TransformerModel ref = io::model_from(init);
  TransformerModel model = io::model_from(init);
  FovPolicy policy = io::policy_from(init);
  const io::Dataset data = io::read_dataset(train_path(out));
  const fs::path ckpt = out / "rl.ckpt";
  MetricsWriter writer(out / "rl_metrics.csv", cfg.seed, cfg.items());
  try {
    const auto s = train_rl(model, policy, ref, data.episodes, cfg.rl, cfg.rollout_decode(), cfg.seed,
                            metrics_sink(writer, cfg.log_every));
    log("rl finished after " + std::to_string(s.steps) + " groups, mean rollout accuracy " + std::to_string(s.acc_mean));
  } catch (const NonFiniteLoss& e) {
    io::save_checkpoint(ckpt, io::make_checkpoint(model, policy));
    log(std::string(e.what()) + "; last good parameters saved to " + ckpt.string());
    return 2;
  }
  io::save_checkpoint(ckpt, io::make_checkpoint(model, policy));
  if (cfg.plots) plot_metrics(out / "rl_metrics.csv", out / "rl_metrics.svg", "rl");
  log("checkpoint written to " + ckpt.string());
  return 0;
}

int cmd_eval(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const fs::path out = o.out;
  const io::Checkpoint ck = require_checkpoint(o);
  const TransformerModel model = io::model_from(ck);
  const FovPolicy policy = io::policy_from(ck);
  const io::Dataset data = io::read_dataset(eval_path(out));
  DecodeConfig dc = cfg.eval_decode();
  dc.interventions = resolve_interventions(o);
  dc.validate();
  const EvalReport r = evaluate(model, policy, data.episodes, dc, cfg.seed);
  write_text(out / "report.json", report_json(r, cfg.seed));
  if (cfg.plots && o.plots) {
    write_text(out / "report.svg", bar_plot_svg("evaluation", {{"accuracy", r.accuracy},
                                                               {"format", r.format_rate},
                                                               {"rho", r.rho.mean},
                                                               {"T_fov", r.t_fov.mean}}));
  }
  std::cout << report_json(r, cfg.seed);
  return 0;
}

int cmd_trace(const Options& o) {
  const RunConfig cfg = resolve_config(o);
  const io::Checkpoint ck = require_checkpoint(o);
  const TransformerModel model = io::model_from(ck);
  const FovPolicy policy = io::policy_from(ck);
  env::TaskKind kind;
  try {
    kind = env::parse_task_kind(o.task);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const env::Episode ep = env::generate_episode(cfg.seed, kind, cfg.env);
  DecodeConfig dc = cfg.eval_decode();
  dc.interventions = resolve_interventions(o);
  dc.validate();
  const Trajectory t = decode(model, policy, ep, dc, cfg.seed);
  for (const auto& line : trace_lines(t, ep)) std::cout << line << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Foveated decoding experiments"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "flat key = value config file");
    sub->add_option("--seed", o.seed, "run seed (overrides the config)");
    sub->add_option("--out", o.out, "run directory")->capture_default_str();
  };
  auto ckpt = [&o](CLI::App* sub) { sub->add_option("--ckpt", o.ckpt, "checkpoint path"); };
  auto interventions = [&o](CLI::App* sub) {
    sub->add_option("--fov-cap", o.fov_cap, "maximum foveation steps")->check(CLI::NonNegativeNumber);
    sub->add_option("--center-mode", o.center_mode, "learned | fixed:CX,CY | random")->capture_default_str();
    sub->add_option("--size-mode", o.size_mode, "learned | fixed:W,H | random")->capture_default_str();
    sub->add_flag("--mask-fov", o.mask_fov, "never allow <fov>");
  };

  auto* gen = app.add_subcommand("gen-data", "write train and eval episode files");
  common(gen);
  auto* cold = app.add_subcommand("coldstart", "supervised coldstart training");
  common(cold);
  ckpt(cold);
  auto* rl = app.add_subcommand("rl", "GRPO training from a coldstart checkpoint");
  common(rl);
  ckpt(rl);
  auto* ev = app.add_subcommand("eval", "greedy evaluation on the eval split");
  common(ev);
  ckpt(ev);
  interventions(ev);
  ev->add_flag("!--no-plots", o.plots, "skip SVG output");
  auto* tr = app.add_subcommand("trace", "decode one episode and print JSONL records");
  common(tr);
  ckpt(tr);
  interventions(tr);
  tr->add_option("--task", o.task, "identify | compare")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*cold) return cmd_coldstart(o);
    if (*rl) return cmd_rl(o);
    if (*ev) return cmd_eval(o);
    if (*tr) return cmd_trace(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 1;
}

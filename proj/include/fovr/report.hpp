// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run outputs: the metrics CSV, evaluation reports, decode traces and SVG plots.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fovr/decode.hpp"
#include "fovr/env.hpp"

namespace fovr {

/// Release identifier written into metrics headers and reports.
std::string version_string();

struct MetricsRow {
  int step = 0;
  std::string stage;
  std::optional<double> loss_lm, loss_box, loss_tok, loss_fov, loss_reg, kl, acc, r_fmt, n_fov_mean, rho_mean,
      t_fov_mean;
};

inline constexpr const char* kMetricsColumns =
    "step,stage,loss_lm,loss_box,loss_tok,loss_fov,loss_reg,kl,acc,r_fmt,n_fov_mean,rho_mean,t_fov_mean";

std::string format_metrics_row(const MetricsRow& row);

/// Writes a '#'-prefixed header (version, seed, every config item), the
/// column line, then one flushed line per append().
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, std::uint64_t seed,
                const std::vector<std::pair<std::string, std::string>>& config);
  void append(const MetricsRow& row);

 private:
  std::ofstream out_;
};

struct MetricsTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // raw fields per line
};

MetricsTable read_metrics(const std::filesystem::path& path);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

Summary summarize(const std::vector<double>& values);

struct EvalReport {
  int count = 0;
  double accuracy = 0.0;
  double format_rate = 0.0;
  Summary n_fov, rho, t_fov;
  std::string interventions;
  std::vector<int> correct;  // per-episode r_acc
};

std::string report_json(const EvalReport& report, std::uint64_t seed);

/// Line-delimited JSON records for one decoded episode.
std::vector<std::string> trace_lines(const Trajectory& traj, const env::Episode& episode);

struct PlotSeries {
  std::string name;
  std::vector<double> x, y;
};

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::vector<PlotSeries>& series);
std::string bar_plot_svg(const std::string& title, const std::vector<std::pair<std::string, double>>& bars);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fovr

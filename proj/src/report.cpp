// Copyright 2026 The fovr Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fovr/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#ifndef FOVR_VERSION
#define FOVR_VERSION "0.0.0"
#endif
#ifndef FOVR_GIT_DESCRIBE
#define FOVR_GIT_DESCRIBE "unknown"
#endif

namespace fovr {

std::string version_string() { return std::string("fovr ") + FOVR_VERSION + " (" + FOVR_GIT_DESCRIBE + ")"; }

namespace {

std::string field(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(10) << *v;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

std::string format_metrics_row(const MetricsRow& r) {
  std::string s = std::to_string(r.step) + "," + r.stage;
  for (const auto* v : {&r.loss_lm, &r.loss_box, &r.loss_tok, &r.loss_fov, &r.loss_reg, &r.kl, &r.acc, &r.r_fmt,
                        &r.n_fov_mean, &r.rho_mean, &r.t_fov_mean}) {
    s += "," + field(*v);
  }
  return s;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, std::uint64_t seed,
                             const std::vector<std::pair<std::string, std::string>>& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot write metrics file " + path.string());
  out_ << "# version: " << version_string() << "\n# seed: " << seed << "\n";
  for (const auto& [k, v] : config) out_ << "# " << k << " = " << v << "\n";
  out_ << kMetricsColumns << "\n";
  out_.flush();
}

void MetricsWriter::append(const MetricsRow& row) {
  out_ << format_metrics_row(row) << "\n";
  out_.flush();
}

MetricsTable read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read metrics file " + path.string());
  MetricsTable t;
  std::string line;
  bool columns = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.header.push_back(line);
      continue;
    }
    if (!columns) {
      if (line != kMetricsColumns) throw std::runtime_error("unexpected metrics columns in " + path.string());
      columns = true;
      continue;
    }
    t.rows.push_back(split_csv(line));
  }
  return t;
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) return {};
  double m = 0.0;
  for (double v : values) m += v;
  m /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - m) * (v - m);
  return {m, std::sqrt(var / static_cast<double>(values.size()))};
}

std::string report_json(const EvalReport& r, std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["version"] = version_string();
  j["seed"] = seed;
  j["count"] = r.count;
  j["accuracy"] = r.accuracy;
  j["format_rate"] = r.format_rate;
  j["interventions"] = r.interventions;
  j["n_fov"] = {{"mean", r.n_fov.mean}, {"std", r.n_fov.std}};
  j["rho"] = {{"mean", r.rho.mean}, {"std", r.rho.std}};
  j["t_fov"] = {{"mean", r.t_fov.mean}, {"std", r.t_fov.std}};
  return j.dump(2) + "\n";
}

std::vector<std::string> trace_lines(const Trajectory& traj, const env::Episode& episode) {
  std::vector<std::string> out;
  std::vector<env::PixelRect> seen;
  std::size_t next_fov = 0;
  for (std::size_t t = 0; t < traj.tokens.size(); ++t) {
    const TokenStep& s = traj.tokens[t];
    nlohmann::ordered_json rec;
    rec["step"] = t;
    if (next_fov < traj.fov_steps.size() && traj.fov_steps[next_fov].token_index == t) {
      const FovStep& f = traj.fov_steps[next_fov++];
      seen.push_back(f.block.source_rect);
      const auto& b = f.sample.box;
      rec["kind"] = "fov";
      rec["box"] = {b.cx, b.cy, b.w, b.h};
      rec["m"] = f.block.m();
      rec["rho"] = env::union_area_fraction(seen, episode.high_res.height, episode.high_res.width);
      out.push_back(rec.dump());
      for (int i = 0; i < f.block.m(); ++i) {
        nlohmann::ordered_json v;
        v["step"] = t;
        v["kind"] = "visual";
        v["index"] = i;
        out.push_back(v.dump());
      }
      nlohmann::ordered_json c;
      c["step"] = t;
      c["kind"] = "fov_close";
      out.push_back(c.dump());
      continue;
    }
    rec["kind"] = "token";
    rec["token"] = s.token;
    rec["name"] = tok::name(s.token);
    out.push_back(rec.dump());
  }
  return out;
}

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::vector<PlotSeries>& series) {
  const double W = 640, H = 400, L = 60, R = 150, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
    os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << escape_xml(x_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      if (std::isfinite(series[s].y[i])) os << px(series[s].x[i]) << "," << py(series[s].y[i]) << " ";
    }
    os << "\"/>\n";
    const double ly = T + 10 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\">" << escape_xml(series[s].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bar_plot_svg(const std::string& title, const std::vector<std::pair<std::string, double>>& bars) {
  const double W = 640, H = 400, L = 60, T = 40, B = 60;
  double vmax = 0.0;
  for (const auto& b : bars) vmax = std::max(vmax, b.second);
  if (vmax <= 0) vmax = 1;
  const double slot = bars.empty() ? 1 : (W - L - 20) / static_cast<double>(bars.size());
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape_xml(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - 20 << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double h = bars[i].second / vmax * (H - T - B);
    const double x = L + slot * static_cast<double>(i) + slot * 0.15;
    os << "<rect x=\"" << x << "\" y=\"" << H - B - h << "\" width=\"" << slot * 0.7 << "\" height=\"" << h << "\" fill=\"" << kPalette[i % std::size(kPalette)] << "\"/>\n";
    os << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << H - B - h - 4 << "\" text-anchor=\"middle\">" << bars[i].second << "</text>\n";
    os << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << escape_xml(bars[i].first) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace fovr

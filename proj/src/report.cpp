#include "slicerl/report.hpp"

#include <boost/algorithm/string.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace slicerl {

namespace fs = std::filesystem;

int MetricsTable::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw std::runtime_error("metrics: no column '" + name + "'");
  return static_cast<int>(it - columns.begin());
}

std::vector<double> MetricsTable::values(const std::string& kind, const std::string& name) const {
  const int c = column(name);
  std::vector<double> out;
  const auto it = rows.find(kind);
  if (it == rows.end()) return out;
  for (const auto& r : it->second) out.push_back(r[static_cast<std::size_t>(c)]);
  return out;
}

namespace {

MetricsTable read_table(const fs::path& path, const std::string& magic) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  MetricsTable t;
  std::string line;
  if (!std::getline(is, line) || !boost::algorithm::starts_with(line, "# " + magic + " v1"))
    throw std::runtime_error(path.string() + ": missing '" + magic + " v1' header");
  std::vector<std::string> tokens;
  boost::algorithm::split(tokens, line, boost::is_any_of(" "));
  for (const auto& tok : tokens) {
    const auto eq = tok.find('=');
    if (eq != std::string::npos) t.attributes[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": missing column header");
  boost::algorithm::split(t.columns, line, boost::is_any_of("\t"));
  const bool has_kind = !t.columns.empty() && t.columns.front() == "kind";
  if (has_kind) t.columns.erase(t.columns.begin());

  std::vector<std::string> cells;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    boost::algorithm::split(cells, line, boost::is_any_of("\t"));
    const std::string kind = has_kind ? cells.front() : "timing";
    const std::size_t first = has_kind ? 1 : 0;
    if (cells.size() - first != t.columns.size())
      throw std::runtime_error(path.string() + ": row has " + std::to_string(cells.size() - first) + " cells, expected " +
                               std::to_string(t.columns.size()));
    std::vector<double> row;
    for (std::size_t i = first; i < cells.size(); ++i) row.push_back(std::stod(cells[i]));
    t.rows[kind].push_back(std::move(row));
  }
  return t;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Runs grouped by algorithm, in first-seen order.
std::vector<std::pair<std::string, std::vector<fs::path>>> group_runs(const std::vector<fs::path>& dirs) {
  std::vector<std::pair<std::string, std::vector<fs::path>>> groups;
  for (const auto& d : dirs) {
    const MetricsTable m = read_metrics(d / "metrics.tsv");
    const auto it = m.attributes.find("algorithm");
    const std::string algo = it == m.attributes.end() ? d.filename().string() : it->second;
    auto g = std::find_if(groups.begin(), groups.end(), [&](const auto& p) { return p.first == algo; });
    if (g == groups.end()) {
      groups.push_back({algo, {}});
      g = groups.end() - 1;
    }
    g->second.push_back(d);
  }
  return groups;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string tick(double v) { return fmt::format("{:.4g}", v); }

}  // namespace

MetricsTable read_metrics(const fs::path& path) { return read_table(path, "slicerl-metrics"); }
MetricsTable read_timing(const fs::path& path) { return read_table(path, "slicerl-timing"); }

std::vector<WallclockRow> report_wallclock(const std::vector<fs::path>& run_dirs, int max_windows) {
  std::vector<WallclockRow> out;
  for (const auto& [algo, dirs] : group_runs(run_dirs)) {
    WallclockRow row;
    row.algorithm = algo;
    std::vector<double> per_run;
    for (const auto& d : dirs) {
      const auto secs = read_timing(d / "timing.tsv").values("timing", "seconds");
      if (secs.empty()) continue;
      const std::size_t k = std::min<std::size_t>(secs.size(), static_cast<std::size_t>(max_windows));
      std::vector<double> picked;
      for (std::size_t i = 0; i < k; ++i) picked.push_back(secs[i * secs.size() / k]);
      per_run.push_back(mean_of(picked));
      row.windows = static_cast<int>(k);
    }
    row.runs = static_cast<int>(per_run.size());
    row.mean_s = mean_of(per_run);
    row.std_s = std_of(per_run);
    out.push_back(row);
  }
  return out;
}

std::string format_wallclock(const std::vector<WallclockRow>& rows) {
  std::string s = fmt::format("{:<10}{:>6}{:>10}{:>16}{:>14}\n", "algorithm", "runs", "windows", "s/window mean", "std");
  for (const auto& r : rows)
    s += fmt::format("{:<10}{:>6}{:>10}{:>16.6f}{:>14.6f}\n", r.algorithm, r.runs, r.windows, r.mean_s, r.std_s);
  return s;
}

std::vector<double> moving_average(const std::vector<double>& y, int window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(y.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sum += y[i];
    if (i >= static_cast<std::size_t>(window)) sum -= y[i - static_cast<std::size_t>(window)];
    out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
  }
  return out;
}

std::vector<double> resample(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& grid) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("resample: need matching, non-empty x and y");
  std::vector<double> out;
  out.reserve(grid.size());
  for (double g : grid) {
    if (g <= x.front()) {
      out.push_back(y.front());
    } else if (g >= x.back()) {
      out.push_back(y.back());
    } else {
      const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), g) - x.begin());
      const std::size_t lo = hi - 1;
      const double w = (g - x[lo]) / (x[hi] - x[lo]);
      out.push_back(y[lo] + w * (y[hi] - y[lo]));
    }
  }
  return out;
}

Band aggregate(const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& ys, int smooth_window,
               bool* resampled) {
  if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("aggregate: need one x per y series");
  const bool same = std::all_of(xs.begin(), xs.end(), [&](const auto& x) { return x == xs.front(); });
  if (resampled) *resampled = !same;
  Band b;
  b.x = *std::min_element(xs.begin(), xs.end(), [](const auto& a, const auto& c) { return a.size() < c.size(); });
  std::vector<std::vector<double>> runs;
  for (std::size_t r = 0; r < ys.size(); ++r)
    runs.push_back(moving_average(same ? ys[r] : resample(xs[r], ys[r], b.x), smooth_window));
  for (std::size_t i = 0; i < b.x.size(); ++i) {
    std::vector<double> col;
    for (const auto& r : runs) col.push_back(r[i]);
    b.mean.push_back(mean_of(col));
    b.std.push_back(std_of(col));
  }
  return b;
}

std::string render_svg(const PlotSpec& spec) {
  const double W = 760, H = 460, left = 80, right = 170, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (std::size_t s = 0; s < spec.series.size(); ++s) {
    const auto& b = spec.series[s].band;
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      const double xv = spec.bars ? static_cast<double>(s) : b.x[i];
      const double lo = b.mean[i] - b.std[i], hi = b.mean[i] + b.std[i];
      if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
      if (!any) {
        x0 = x1 = xv;
        y0 = lo;
        y1 = hi;
        any = true;
      }
      x0 = std::min(x0, xv);
      x1 = std::max(x1, xv);
      y0 = std::min(y0, lo);
      y1 = std::max(y1, hi);
    }
  }
  if (spec.bars) {
    x0 = -0.5;
    x1 = static_cast<double>(spec.series.size()) - 0.5;
    y0 = std::min(0.0, y0);
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) {
    y0 -= 0.5 * std::max(1e-12, std::abs(y0));
    y1 += 0.5 * std::max(1e-12, std::abs(y1));
  }
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  std::string s = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H, W, H);
  s += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n", left + pw / 2, esc(spec.title));
  s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", left, top, pw, ph);

  for (int i = 0; i <= 5; ++i) {
    const double yv = y0 + (y1 - y0) * i / 5.0;
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#ddd\"/>\n", left, py(yv), left + pw, py(yv));
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", left - 6, py(yv) + 4, tick(yv));
    if (!spec.bars) {
      const double xv = x0 + (x1 - x0) * i / 5.0;
      s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", px(xv), top + ph + 18, tick(xv));
    }
  }
  s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, H - 14, esc(spec.x_label));
  s += fmt::format("<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n", top + ph / 2,
                   top + ph / 2, esc(spec.y_label));

  for (std::size_t k = 0; k < spec.series.size(); ++k) {
    const auto& ser = spec.series[k];
    const auto& b = ser.band;
    const char* color = kPalette[k % std::size(kPalette)];
    if (spec.bars) {
      if (b.mean.empty()) continue;
      const double cx = px(static_cast<double>(k)), bw = 0.6 * pw / static_cast<double>(spec.series.size());
      const double base = py(std::max(0.0, y0));
      const double top_y = py(b.mean[0]);
      s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\" fill-opacity=\"0.7\"/>\n",
                       cx - bw / 2, std::min(top_y, base), bw, std::abs(base - top_y), color);
      s += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>\n", cx,
                       py(b.mean[0] - b.std[0]), py(b.mean[0] + b.std[0]));
      s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", cx, top + ph + 18, esc(ser.label));
      continue;
    }
    std::string band, line;
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      band += fmt::format("{:.2f},{:.2f} ", px(b.x[i]), py(b.mean[i] + b.std[i]));
      line += fmt::format("{:.2f},{:.2f} ", px(b.x[i]), py(b.mean[i]));
    }
    for (std::size_t i = b.x.size(); i-- > 0;) band += fmt::format("{:.2f},{:.2f} ", px(b.x[i]), py(b.mean[i] - b.std[i]));
    s += fmt::format("<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n", band, color);
    s += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>\n", line, color);
    const double ly = top + 16 + 18 * static_cast<double>(k);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"3\"/>\n", left + pw + 12, ly,
                     left + pw + 36, color);
    s += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", left + pw + 42, ly + 4, esc(ser.label));
  }
  s += "</svg>\n";
  return s;
}

std::string render_csv(const PlotSpec& spec) {
  std::string s = "label,x,mean,std\n";
  for (const auto& ser : spec.series)
    for (std::size_t i = 0; i < ser.band.x.size(); ++i)
      s += fmt::format("{},{},{},{}\n", ser.label, ser.band.x[i], ser.band.mean[i], ser.band.std[i]);
  return s;
}

PlotKind plot_kind_from_string(const std::string& s) {
  if (s == "return") return PlotKind::returns;
  if (s == "energy") return PlotKind::energy;
  if (s == "energy_per_slice") return PlotKind::energy_per_slice;
  if (s == "cpu") return PlotKind::cpu;
  if (s == "wallclock") return PlotKind::wallclock;
  throw std::invalid_argument("unknown plot kind '" + s + "' (return|energy|energy_per_slice|cpu|wallclock)");
}

std::vector<std::string> plot_runs(PlotKind kind, const std::vector<fs::path>& run_dirs, const fs::path& out,
                                   int smooth_window) {
  if (run_dirs.empty()) throw std::invalid_argument("plot: no run directories");
  std::vector<std::string> warnings;
  PlotSpec spec;
  spec.x_label = "environment step";

  if (kind == PlotKind::wallclock) {
    spec.title = "Wall-clock time per training window";
    spec.x_label = "algorithm";
    spec.y_label = "seconds per window";
    spec.bars = true;
    for (const auto& r : report_wallclock(run_dirs)) spec.series.push_back({r.algorithm, {{0.0}, {r.mean_s}, {r.std_s}}});
  } else {
    std::string row_kind = "episode";
    std::vector<std::pair<std::string, std::string>> columns;  // (column, label suffix)
    switch (kind) {
      case PlotKind::returns:
        spec.title = "Evaluation return (best 3 of 5)";
        spec.y_label = "return";
        row_kind = "eval";
        columns = {{"eval_score", ""}};
        break;
      case PlotKind::energy:
        spec.title = "Network energy";
        spec.y_label = "mean energy per step (W)";
        columns = {{"energy_w", ""}};
        break;
      case PlotKind::cpu:
        spec.title = "CPU utilization";
        spec.y_label = "utilized / allocated cores";
        columns = {{"cpu_utilization", ""}};
        break;
      case PlotKind::energy_per_slice: {
        spec.title = "Energy per slice";
        spec.y_label = "mean energy per step (W)";
        const MetricsTable first = read_metrics(run_dirs.front() / "metrics.tsv");
        for (const auto& c : first.columns)
          if (boost::algorithm::starts_with(c, "energy_") && c != "energy_w")
            columns.push_back({c, " " + c.substr(7, c.size() - 9)});
        break;
      }
      case PlotKind::wallclock:
        break;
    }
    for (const auto& [algo, dirs] : group_runs(run_dirs)) {
      for (const auto& [col, suffix] : columns) {
        std::vector<std::vector<double>> xs, ys;
        for (const auto& d : dirs) {
          const MetricsTable m = read_metrics(d / "metrics.tsv");
          xs.push_back(m.values(row_kind, "step"));
          ys.push_back(m.values(row_kind, col));
          if (xs.back().empty()) throw std::runtime_error(d.string() + ": no '" + row_kind + "' rows to plot");
        }
        bool resampled = false;
        Band b = aggregate(xs, ys, smooth_window, &resampled);
        if (resampled)
          warnings.push_back(algo + suffix + ": step grids differ across runs; resampled onto the coarsest grid");
        spec.series.push_back({algo + suffix, std::move(b)});
      }
    }
  }

  std::ofstream(out, std::ios::trunc) << render_svg(spec);
  fs::path csv = out;
  csv.replace_extension(".csv");
  std::ofstream(csv, std::ios::trunc) << render_csv(spec);
  if (!fs::exists(out)) throw std::runtime_error("cannot write " + out.string());
  return warnings;
}

}  // namespace slicerl

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace slicerl {

/// A metrics or timing file read back: the '#' header attributes plus one
/// numeric table per row kind ("episode", "window", "eval", "summary"; timing
/// files have a single kind "timing").
struct MetricsTable {
  std::map<std::string, std::string> attributes;  // from the version line, e.g. algorithm=tdsac
  std::vector<std::string> columns;               // excluding "kind"
  std::map<std::string, std::vector<std::vector<double>>> rows;

  int column(const std::string& name) const;
  std::vector<double> values(const std::string& kind, const std::string& name) const;
};

MetricsTable read_metrics(const std::filesystem::path& path);
MetricsTable read_timing(const std::filesystem::path& path);

struct WallclockRow {
  std::string algorithm;
  int runs = 0;
  int windows = 0;    // measurement windows averaged per run
  double mean_s = 0;  // seconds per window, mean over runs
  double std_s = 0;   // across runs
};

/// Up to `max_windows` evenly spaced windows per run; runs are grouped by the
/// algorithm recorded in their metrics header.
std::vector<WallclockRow> report_wallclock(const std::vector<std::filesystem::path>& run_dirs, int max_windows = 100);
std::string format_wallclock(const std::vector<WallclockRow>& rows);

/// Mean and spread of several aligned series.
struct Band {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;
};

/// Trailing moving average; window 1 returns the input.
std::vector<double> moving_average(const std::vector<double>& y, int window);

/// Linear interpolation of (x, y) at `grid`; values outside the span are clamped to the ends.
std::vector<double> resample(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& grid);

/// Aggregates runs sharing one grid. If grids differ, every run is resampled
/// onto the grid with the fewest points and `resampled` is set.
Band aggregate(const std::vector<std::vector<double>>& xs, const std::vector<std::vector<double>>& ys, int smooth_window,
               bool* resampled = nullptr);

struct Series {
  std::string label;
  Band band;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool bars = false;  // one bar with an error whisker per series, for wall-clock comparisons
};

std::string render_svg(const PlotSpec& spec);
/// label,x,mean,std rows.
std::string render_csv(const PlotSpec& spec);

enum class PlotKind { returns, energy, energy_per_slice, cpu, wallclock };
PlotKind plot_kind_from_string(const std::string& s);

/// Builds the figure for `kind` from run directories (grouped by algorithm),
/// writes `out` (SVG) and `out` with extension .csv; returns warnings.
std::vector<std::string> plot_runs(PlotKind kind, const std::vector<std::filesystem::path>& run_dirs,
                                   const std::filesystem::path& out, int smooth_window = 1);

}  // namespace slicerl

#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace rntc {

/// Comma-separated table with an optional leading "# ..." provenance line.
struct CsvTable {
  std::string provenance;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header. Throws IoError if absent.
  std::size_t column(const std::string& name) const;
};

/// Throws IoError on unreadable files or ragged rows.
CsvTable read_csv(const std::string& path);

struct PlotSeries {
  std::string label;
  std::vector<Eigen::Vector2d> points;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  /// Polylines through the points; scatter only when false.
  bool lines = true;
};

/// Minimal deterministic SVG: axes, ticks, one polyline or marker set per series, legend.
std::string render_svg(const PlotSpec& plot);

/// Benchmark files the report needs, relative to the input directory.
const std::vector<std::string>& report_inputs();

/// Reads the plot-data CSVs in `in_dir`, writes report.txt and four SVG plots into `out_dir`,
/// and returns the text summary. Missing inputs are listed in the IoError message.
std::string make_report(const std::string& in_dir, const std::string& out_dir);

}  // namespace rntc

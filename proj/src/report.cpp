#include "rntc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rntc/errors.hpp"

namespace rntc {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// NaN for "NA" and anything unparsable.
double cell_value(const std::string& s) {
  if (s.empty() || s == "NA") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() ? v : std::numeric_limits<double>::quiet_NaN();
}

std::string f2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Tick label with at most 4 significant digits and no trailing zeros.
std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range padded_range(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {};
  if (hi - lo < 1e-12) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

/// Series per mode, in first-appearance order, from (mode, x, y) columns.
std::vector<PlotSeries> series_by_mode(const CsvTable& t, const std::string& x, const std::string& y) {
  const std::size_t cm = t.column("mode"), cx = t.column(x), cy = t.column(y);
  std::vector<PlotSeries> out;
  for (const auto& row : t.rows) {
    const double vx = cell_value(row[cx]), vy = cell_value(row[cy]);
    if (!std::isfinite(vx) || !std::isfinite(vy)) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const PlotSeries& s) { return s.label == row[cm]; });
    if (it == out.end()) {
      out.push_back({row[cm], {}});
      it = out.end() - 1;
    }
    it->points.emplace_back(vx, vy);
  }
  for (auto& s : out) {
    std::stable_sort(s.points.begin(), s.points.end(),
                     [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() < b.x(); });
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed to write '" + path.string() + "'");
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("csv: missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (t.header.empty() && t.provenance.empty()) t.provenance = line.substr(1);
      continue;
    }
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) throw IoError("'" + path + "': ragged row");
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw IoError("'" + path + "': no header");
  return t;
}

std::string render_svg(const PlotSpec& plot) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : plot.series) {
    for (const auto& p : s.points) {
      xlo = std::min(xlo, p.x());
      xhi = std::max(xhi, p.x());
      ylo = std::min(ylo, p.y());
      yhi = std::max(yhi, p.y());
    }
  }
  const Range xr = padded_range(xlo, xhi), yr = padded_range(ylo, yhi);
  const double pw = W - L - R, ph = H - T - B;
  auto sx = [&](double x) { return L + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return T + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << f2(L + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(plot.title)
    << "</text>\n";
  o << "<rect x=\"" << f2(L) << "\" y=\"" << f2(T) << "\" width=\"" << f2(pw) << "\" height=\"" << f2(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0, yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    o << "<line x1=\"" << f2(sx(xv)) << "\" y1=\"" << f2(T + ph) << "\" x2=\"" << f2(sx(xv)) << "\" y2=\""
      << f2(T + ph + 5) << "\" stroke=\"black\"/>";
    o << "<text x=\"" << f2(sx(xv)) << "\" y=\"" << f2(T + ph + 18) << "\" text-anchor=\"middle\">" << tick_label(xv)
      << "</text>\n";
    o << "<line x1=\"" << f2(L - 5) << "\" y1=\"" << f2(sy(yv)) << "\" x2=\"" << f2(L) << "\" y2=\"" << f2(sy(yv))
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << f2(L - 8) << "\" y=\"" << f2(sy(yv) + 4) << "\" text-anchor=\"end\">" << tick_label(yv)
      << "</text>\n";
  }
  o << "<text x=\"" << f2(L + pw / 2) << "\" y=\"" << f2(H - 12) << "\" text-anchor=\"middle\">"
    << escape(plot.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << f2(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << f2(T + ph / 2) << ")\">" << escape(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kPalette[k % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (plot.lines && s.points.size() > 1) {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.points.size(); ++i) {
        o << (i ? " " : "") << f2(sx(s.points[i].x())) << ',' << f2(sy(s.points[i].y()));
      }
      o << "\"/>\n";
    }
    for (const auto& p : s.points) {
      o << "<circle cx=\"" << f2(sx(p.x())) << "\" cy=\"" << f2(sy(p.y())) << "\" r=\"4\" fill=\"" << color
        << "\"/>\n";
    }
    const double ly = T + 10 + 20.0 * static_cast<double>(k);
    o << "<rect x=\"" << f2(W - R + 15) << "\" y=\"" << f2(ly - 8) << "\" width=\"12\" height=\"12\" fill=\"" << color
      << "\"/><text x=\"" << f2(W - R + 33) << "\" y=\"" << f2(ly + 2) << "\">" << escape(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

const std::vector<std::string>& report_inputs() {
  static const std::vector<std::string> files = {"summary.csv", "success_vs_horizon.csv", "opt_time_vs_horizon.csv",
                                                 "travel_time_vs_horizon.csv", "pareto.csv"};
  return files;
}

std::string make_report(const std::string& in_dir, const std::string& out_dir) {
  const fs::path in(in_dir);
  if (!fs::is_directory(in)) throw IoError("report: '" + in_dir + "' is not a directory");
  std::string missing;
  for (const auto& f : report_inputs()) {
    if (!fs::is_regular_file(in / f)) missing += (missing.empty() ? "" : ", ") + f;
  }
  if (!missing.empty()) throw IoError("report: missing inputs in '" + in_dir + "': " + missing);

  const CsvTable summary = read_csv((in / "summary.csv").string());
  const CsvTable success = read_csv((in / "success_vs_horizon.csv").string());
  const CsvTable opt = read_csv((in / "opt_time_vs_horizon.csv").string());
  const CsvTable travel = read_csv((in / "travel_time_vs_horizon.csv").string());
  const CsvTable pareto = read_csv((in / "pareto.csv").string());

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir + "': " + ec.message());
  const fs::path out(out_dir);

  write_text(out / "success_vs_horizon.svg",
             render_svg({"Success rate vs horizon", "horizon N", "success rate",
                         series_by_mode(success, "N", "success_rate"), true}));
  write_text(out / "opt_time_vs_horizon.svg",
             render_svg({"Optimization time vs horizon", "horizon N", "mean plan time [ms]",
                         series_by_mode(opt, "N", "opt_time_mean_ms"), true}));
  write_text(out / "travel_time_vs_horizon.svg",
             render_svg({"Travel time vs horizon", "horizon N", "mean travel time [s]",
                         series_by_mode(travel, "N", "travel_time_mean_s"), true}));

  // One labelled point per (mode, horizon).
  PlotSpec scatter{"Travel time vs success", "mean travel time [s]", "success rate", {}, false};
  {
    const std::size_t cm = pareto.column("mode"), cn = pareto.column("N"), ct = pareto.column("travel_time_mean_s"),
                      cs = pareto.column("success_rate");
    for (const auto& row : pareto.rows) {
      const double t = cell_value(row[ct]), s = cell_value(row[cs]);
      if (!std::isfinite(t) || !std::isfinite(s)) continue;
      scatter.series.push_back({row[cm] + " N=" + row[cn], {Eigen::Vector2d(t, s)}});
    }
  }
  write_text(out / "pareto.svg", render_svg(scatter));

  std::ostringstream text;
  if (!summary.provenance.empty()) text << "#" << summary.provenance << "\n";
  const std::vector<std::string> cols = {"mode", "N", "episodes", "success_rate", "collision_rate", "timeout_rate",
                                         "travel_time_mean_s", "opt_time_mean_ms"};
  std::vector<std::size_t> idx;
  for (const auto& c : cols) idx.push_back(summary.column(c));
  std::vector<std::size_t> width(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    width[j] = cols[j].size();
    for (const auto& row : summary.rows) width[j] = std::max(width[j], row[idx[j]].size());
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      text << (j ? "  " : "") << cells[j] << std::string(width[j] - cells[j].size(), ' ');
    }
    text << "\n";
  };
  emit(cols);
  for (const auto& row : summary.rows) {
    std::vector<std::string> cells;
    for (auto i : idx) cells.push_back(row[i]);
    emit(cells);
  }
  const std::string report = text.str();
  write_text(out / "report.txt", report);
  return report;
}

}  // namespace rntc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wsl/config.hpp"

namespace wsl {

inline constexpr int csv_schema_version = 1;

/// Shortest text that reads back to the same double.
inline std::string exact(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  for (int p = 15; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw DimensionMismatch("table row width does not match its columns");
    rows.push_back(std::move(row));
  }
  std::vector<double> column(std::size_t i) const {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[i]);
    return out;
  }
};

inline void write_csv(const std::filesystem::path& path, const Table& t) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << exact(r[i]);
    os << "\n";
  }
}

struct Series {
  Series(std::string name, std::vector<double> x, std::vector<double> y, bool markers = false)
      : name(std::move(name)), x(std::move(x)), y(std::move(y)), markers(markers) {}
  std::string name;
  std::vector<double> x, y;
  bool markers;
};

struct Plot {
  Plot(std::string title, std::string xlabel, std::string ylabel, std::vector<Series> series = {},
       std::vector<std::pair<std::string, double>> hlines = {}, bool log_y = false)
      : title(std::move(title)), xlabel(std::move(xlabel)), ylabel(std::move(ylabel)), series(std::move(series)),
        hlines(std::move(hlines)), log_y(log_y) {}
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
  std::vector<std::pair<std::string, double>> hlines;  // labelled reference levels
  bool log_y;
};

/// Standalone SVG line plot; the plotted data is repeated as CSV inside a comment.
inline void write_svg(const std::filesystem::path& path, const Plot& p) {
  const double W = 640, H = 420, ml = 70, mr = 20, mt = 36, mb = 50;
  auto ty = [&](double y) { return p.log_y ? std::log10(std::max(std::abs(y), 1e-300)) : y; };
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i])), y1 = std::max(y1, ty(s.y[i]));
    }
  for (const auto& [_, v] : p.hlines) y0 = std::min(y0, ty(v)), y1 = std::max(y1, ty(v));
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  double pad = 0.05 * (y1 - y0);
  y0 -= pad, y1 += pad;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (ty(y) - y0) / (y1 - y0) * (H - mt - mb); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<!-- data\nseries,x,y\n";
  for (const auto& s : p.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) os << s.name << "," << exact(s.x[i]) << "," << exact(s.y[i]) << "\n";
  for (const auto& [name, v] : p.hlines) os << name << ",," << exact(v) << "\n";
  os << "-->\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << p.title << "</text>\n";
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\"" << H - mt - mb
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    double X = ml + (W - ml - mr) * i / 4, Y = H - mb - (H - mt - mb) * i / 4;
    char lx[32], ly[32];
    std::snprintf(lx, sizeof lx, "%.3g", xv);
    std::snprintf(ly, sizeof ly, "%.4g", p.log_y ? std::pow(10.0, yv) : yv);
    os << "<text x=\"" << X << "\" y=\"" << H - mb + 16 << "\" text-anchor=\"middle\">" << lx << "</text>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << Y + 4 << "\" text-anchor=\"end\">" << ly << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << p.xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">" << p.ylabel
     << (p.log_y ? " (log)" : "") << "</text>\n";
  for (const auto& [name, v] : p.hlines) {
    os << "<line x1=\"" << ml << "\" x2=\"" << W - mr << "\" y1=\"" << py(v) << "\" y2=\"" << py(v)
       << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
    os << "<text x=\"" << W - mr - 4 << "\" y=\"" << py(v) - 4 << "\" text-anchor=\"end\" fill=\"gray\">" << name << "</text>\n";
  }
  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const auto& s = p.series[k];
    const char* c = colors[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << "," << py(s.y[i]) << " ";
    os << "\"/>\n";
    if (s.markers)
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    os << "<text x=\"" << ml + 8 << "\" y=\"" << mt + 16 + 14 * k << "\" fill=\"" << c << "\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
}

/// One asserted inequality of a run.
struct Check {
  std::string name;
  std::string inequality;
  double lhs = 0.0, rhs = 0.0;
  bool passed = false;
};

/// Collects results, checks and artifacts of one command and writes them under the output directory.
class Report {
 public:
  Report(std::string command, const ExperimentConfig& cfg, std::filesystem::path dir)
      : command_(std::move(command)), dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
    j_["command"] = command_;
    j_["config"] = cfg.resolved;
    j_["results"] = Json::object();
  }

  Json& results() { return j_["results"]; }

  /// Records lhs >= rhs.
  bool check_ge(const std::string& name, const std::string& inequality, double lhs, double rhs) {
    return add({name, inequality, lhs, rhs, lhs >= rhs});
  }
  bool check_le(const std::string& name, const std::string& inequality, double lhs, double rhs) {
    return add({name, inequality, lhs, rhs, lhs <= rhs});
  }
  bool check(const std::string& name, const std::string& statement, bool ok) { return add({name, statement, ok ? 1.0 : 0.0, 1.0, ok}); }

  void csv(const std::string& file, const Table& t) {
    write_csv(dir_ / file, t);
    artifacts_.push_back({{"file", file}, {"kind", "csv"}, {"columns", t.columns}, {"schema_version", csv_schema_version}});
  }
  void svg(const std::string& file, const Plot& p) {
    write_svg(dir_ / file, p);
    artifacts_.push_back({{"file", file}, {"kind", "svg"}, {"title", p.title}});
  }

  const std::vector<Check>& checks() const { return checks_; }
  bool passed() const {
    return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.passed; });
  }

  void write() {
    Json cs = Json::array();
    for (const auto& c : checks_)
      cs.push_back({{"name", c.name}, {"inequality", c.inequality}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"passed", c.passed}});
    j_["checks"] = cs;
    j_["passed"] = passed();
    j_["artifacts"] = artifacts_;
    std::ofstream os(dir_ / "report.json");
    if (!os) throw ConfigError("cannot write " + (dir_ / "report.json").string());
    os << j_.dump(2) << "\n";
  }

  const Json& json() const { return j_; }

 private:
  bool add(Check c) {
    checks_.push_back(std::move(c));
    return checks_.back().passed;
  }

  std::string command_;
  std::filesystem::path dir_;
  Json j_;
  Json artifacts_ = Json::array();
  std::vector<Check> checks_;
};

}  // namespace wsl

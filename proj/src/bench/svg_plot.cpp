#include "hg/bench/svg_plot.hpp"

#include "hg/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

namespace hg::bench {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

double parse_cell(const std::string& s, std::string_view column) {
  if (s == "nan" || s == "NaN") return std::nan("");
  if (s == "inf") return HUGE_VAL;
  if (s == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(Errc::SchemaError, fmt::format("column '{}' has non-numeric value '{}'", column, s));
  return v;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

std::string tick_label(double v) { return fmt::format("{:.3g}", v); }

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;
  double px_lo = 0.0;
  double px_hi = 1.0;

  [[nodiscard]] double map(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double x = log ? std::log10(v) : v;
    const double f = b > a ? (x - a) / (b - a) : 0.5;
    return px_lo + f * (px_hi - px_lo);
  }
};

void pad_range(double& lo, double& hi, bool log) {
  if (log) {
    if (lo == hi) {
      lo /= 10.0;
      hi *= 10.0;
    }
    return;
  }
  if (lo == hi) {
    const double d = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    lo -= d;
    hi += d;
  }
}

std::vector<double> linear_ticks(double lo, double hi) {
  std::vector<double> ticks;
  for (int i = 0; i <= 4; ++i) ticks.push_back(lo + (hi - lo) * i / 4.0);
  return ticks;
}

std::vector<double> decade_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const int a = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
  const int b = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
  const int stride = std::max(1, (b - a) / 8 + 1);
  for (int e = a; e <= b; e += stride) ticks.push_back(std::pow(10.0, e));
  if (ticks.empty()) ticks = {lo, hi};
  return ticks;
}

}  // namespace

std::vector<Series> aggregate(const CsvTable& table, const PlotSpec& spec) {
  const std::size_t xc = table.column(spec.x);
  const std::size_t yc = table.column(spec.y);
  const std::optional<std::size_t> gc =
      spec.group_by ? std::optional<std::size_t>(table.column(*spec.group_by)) : std::nullopt;

  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::vector<double>>> buckets;
  for (const auto& row : table.rows) {
    const std::string g = gc ? row[*gc] : spec.y;
    if (!buckets.contains(g)) order.push_back(g);
    auto& per_x = buckets[g];
    const double x = parse_cell(row[xc], spec.x);
    const double y = parse_cell(row[yc], spec.y);
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    if (spec.log_y && y <= 0.0) continue;
    per_x[x].push_back(y);
  }

  std::vector<Series> out;
  for (const auto& g : order) {
    Series s{g, {}};
    for (const auto& [x, ys] : buckets[g]) {
      double mean = 0.0;
      for (double y : ys) mean += y;
      mean /= static_cast<double>(ys.size());
      double var = 0.0;
      for (double y : ys) var += (y - mean) * (y - mean);
      var /= static_cast<double>(ys.size());
      s.points.push_back({x, mean, std::sqrt(var), static_cast<int>(ys.size())});
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string render_svg(const CsvTable& table, const PlotSpec& spec) {
  if (table.rows.empty()) throw Error(Errc::SchemaError, "CSV has no data rows");
  const auto series = aggregate(table, spec);

  double xlo = HUGE_VAL, xhi = -HUGE_VAL, ylo = HUGE_VAL, yhi = -HUGE_VAL;
  for (const auto& s : series) {
    for (const auto& p : s.points) {
      xlo = std::min(xlo, p.x);
      xhi = std::max(xhi, p.x);
      const double lo_band = p.mean - p.std;
      ylo = std::min(ylo, spec.log_y && lo_band <= 0.0 ? p.mean : lo_band);
      yhi = std::max(yhi, p.mean + p.std);
    }
  }
  const bool empty = !(xlo <= xhi);
  if (empty) {
    xlo = 0.0;
    xhi = 1.0;
    ylo = spec.log_y ? 1.0 : 0.0;
    yhi = spec.log_y ? 10.0 : 1.0;
  }
  pad_range(xlo, xhi, false);
  pad_range(ylo, yhi, spec.log_y);
  if (spec.log_y) {
    ylo = std::pow(10.0, std::floor(std::log10(ylo)));
    yhi = std::pow(10.0, std::ceil(std::log10(yhi)));
  }

  const Axis ax{xlo, xhi, false, kLeft, kWidth - kRight};
  const Axis ay{ylo, yhi, spec.log_y, kHeight - kBottom, kTop};
  auto clamp_y = [&](double v) { return spec.log_y ? std::max(v, ylo) : v; };

  std::string svg;
  auto out = std::back_inserter(svg);
  fmt::format_to(out, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
  fmt::format_to(out,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
                 "viewBox=\"0 0 {} {}\">\n",
                 kWidth, kHeight, kWidth, kHeight);
  fmt::format_to(out, "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  if (!spec.title.empty()) {
    fmt::format_to(out, "<text x=\"{}\" y=\"22\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
                   num((kLeft + kWidth - kRight) / 2), xml_escape(spec.title));
  }

  // axes and ticks
  fmt::format_to(out, "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n");
  fmt::format_to(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", num(kLeft), num(kHeight - kBottom),
                 num(kWidth - kRight), num(kHeight - kBottom));
  fmt::format_to(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", num(kLeft), num(kTop), num(kLeft),
                 num(kHeight - kBottom));
  fmt::format_to(out, "</g>\n<g font-family=\"sans-serif\" font-size=\"10\">\n");
  for (double v : linear_ticks(xlo, xhi)) {
    const double px = ax.map(v);
    fmt::format_to(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", num(px),
                   num(kHeight - kBottom), num(kHeight - kBottom + 4));
    fmt::format_to(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", num(px),
                   num(kHeight - kBottom + 16), xml_escape(tick_label(v)));
  }
  for (double v : spec.log_y ? decade_ticks(ylo, yhi) : linear_ticks(ylo, yhi)) {
    const double py = ay.map(v);
    fmt::format_to(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", num(kLeft - 4),
                   num(py), num(kLeft));
    fmt::format_to(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", num(kLeft - 6), num(py + 3),
                   xml_escape(tick_label(v)));
  }
  fmt::format_to(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
                 num((kLeft + kWidth - kRight) / 2), num(kHeight - 12), xml_escape(spec.x));
  fmt::format_to(out,
                 "<text x=\"16\" y=\"{0}\" text-anchor=\"middle\" font-size=\"12\" "
                 "transform=\"rotate(-90 16 {0})\">{1}</text>\n",
                 num((kTop + kHeight - kBottom) / 2), xml_escape(spec.log_y ? spec.y + " (log)" : spec.y));
  fmt::format_to(out, "</g>\n");

  // bands, lines, markers, legend
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* colour = kPalette[i % std::size(kPalette)];
    if (s.points.empty()) continue;
    fmt::format_to(out, "<g id=\"series-{}\">\n", i);
    if (s.points.size() > 1) {
      std::string band;
      for (const auto& p : s.points) band += fmt::format("{},{} ", num(ax.map(p.x)), num(ay.map(clamp_y(p.mean + p.std))));
      for (auto it = s.points.rbegin(); it != s.points.rend(); ++it)
        band += fmt::format("{},{} ", num(ax.map(it->x)), num(ay.map(clamp_y(it->mean - it->std))));
      band.pop_back();
      fmt::format_to(out, "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>\n", band, colour);
      std::string line;
      for (const auto& p : s.points) line += fmt::format("{},{} ", num(ax.map(p.x)), num(ay.map(p.mean)));
      line.pop_back();
      fmt::format_to(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>\n", line,
                     colour);
    } else {
      const auto& p = s.points.front();
      fmt::format_to(out, "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n", num(ax.map(p.x)), num(ay.map(p.mean)),
                     colour);
    }
    const double ly = kTop + 10.0 + 16.0 * static_cast<double>(i);
    fmt::format_to(out, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                   num(kWidth - kRight + 12), num(ly), num(kWidth - kRight + 32), colour);
    fmt::format_to(out, "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                   num(kWidth - kRight + 38), num(ly + 4), xml_escape(s.name));
    fmt::format_to(out, "</g>\n");
  }
  fmt::format_to(out, "</svg>\n");
  return svg;
}

std::vector<std::string> emit_plot(const std::string& csv_path, const PlotSpec& spec, const std::string& out_path) {
  const CsvTable table = read_csv_file(csv_path);
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, fmt::format("cannot write '{}'", path));
    out << text;
    if (!out) throw Error(Errc::IoError, fmt::format("write to '{}' failed", path));
  };
  if (!spec.facet) {
    write(out_path, render_svg(table, spec));
    return {out_path};
  }
  if (table.rows.empty()) throw Error(Errc::SchemaError, "CSV has no data rows");
  const std::size_t fc = table.column(*spec.facet);
  std::vector<std::string> values;
  for (const auto& row : table.rows) {
    if (std::find(values.begin(), values.end(), row[fc]) == values.end()) values.push_back(row[fc]);
  }
  const std::filesystem::path base(out_path);
  std::vector<std::string> written;
  for (const auto& v : values) {
    CsvTable sub{table.header, {}};
    for (const auto& row : table.rows) {
      if (row[fc] == v) sub.rows.push_back(row);
    }
    PlotSpec s = spec;
    s.facet.reset();
    s.title = spec.title.empty() ? v : spec.title + " - " + v;
    std::string safe;
    for (char c : v) safe += std::isalnum(static_cast<unsigned char>(c)) || c == '-' ? c : '_';
    const auto path = (base.parent_path() / (base.stem().string() + "_" + safe + ".svg")).string();
    write(path, render_svg(sub, s));
    written.push_back(path);
  }
  return written;
}

}  // namespace hg::bench

#pragma once

// Dependency-free SVG 1.1 line charts: one line per group with a shaded
// mean +- std band over rows that share the same x.

#include "hg/csv.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hg::bench {

struct PlotSpec {
  std::string x;
  std::string y;
  std::optional<std::string> group_by;
  bool log_y = false;
  std::optional<std::string> facet;  // one SVG per distinct value
  std::string title;
};

struct SeriesPoint {
  double x = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  int count = 0;
};

struct Series {
  std::string name;
  std::vector<SeriesPoint> points;  // sorted by x
};

/// Groups rows (first-appearance order), averages y per x. Non-numeric cells
/// throw SchemaError. With log_y, non-positive y values are dropped.
std::vector<Series> aggregate(const CsvTable& table, const PlotSpec& spec);

/// Throws SchemaError for a table without data rows or missing columns.
std::string render_svg(const CsvTable& table, const PlotSpec& spec);

/// Reads csv_path and writes out_path, or <stem>_<value>.svg per facet value.
/// Returns the files written.
std::vector<std::string> emit_plot(const std::string& csv_path, const PlotSpec& spec, const std::string& out_path);

}  // namespace hg::bench

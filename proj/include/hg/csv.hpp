#pragma once

// RFC-4180 CSV with '.' decimal separator and 17 significant digits.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hg {

std::string format_double(double x);
std::string csv_escape(std::string_view field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(const std::vector<std::string>& names) { row(names); }
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws SchemaError if the column is absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
};

/// Parses RFC-4180 text. Throws SchemaError on ragged rows or an empty input.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv_file(const std::string& path);

}  // namespace hg

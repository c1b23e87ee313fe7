#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gamc::csv {

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view s);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws IOError if absent.
  std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header line. No quoting support.
Table read(const std::string& path);

/// Writes UTF-8 text with LF line endings.
void write(const std::string& path, const Table& table);
void write_text(const std::string& path, const std::string& contents);
std::string read_text(const std::string& path);

}  // namespace gamc::csv

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace twinforge::csv {

/// Shortest text that parses back to the identical double.
std::string format_double(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws SchemaError when absent.
  std::size_t column(const std::string& name) const;
  std::vector<double> numeric_column(const std::string& name) const;
};

Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);

/// Write a file atomically (temp file + rename).
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

double parse_double(const std::string& text);

}  // namespace twinforge::csv

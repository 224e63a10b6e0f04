#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace meetbrain::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws Error(Schema) if absent.
  std::size_t column(std::string_view name) const;
};

// Comma-separated, first line is the header, double-quoted fields allowed.
// Every row must have the header's column count.
Table parse(std::string_view text);

// Numeric-only table: header plus rows of doubles. Much faster than parse().
struct NumericTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  std::size_t column(std::string_view name) const;
};
NumericTable parse_numeric(std::string_view text, std::size_t expected_columns = 0);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

int to_int(const std::string& s, std::size_t row);
double to_double(const std::string& s, std::size_t row);

// Shortest round-trip decimal representation.
void append_number(std::string& out, double v);
std::string format_number(double v);
std::string quote(std::string_view field);

}  // namespace meetbrain::csv

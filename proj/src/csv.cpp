#include "meetbrain/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "meetbrain/error.hpp"

namespace meetbrain::csv {
namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) fn(line);
    pos = nl + 1;
  }
}

std::size_t find_column(const std::vector<std::string>& header, std::string_view name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw Error(ErrorKind::Schema, "missing CSV column '" + std::string(name) + "'");
}

}  // namespace

std::size_t Table::column(std::string_view name) const { return find_column(header, name); }
std::size_t NumericTable::column(std::string_view name) const { return find_column(header, name); }

Table parse(std::string_view text) {
  Table t;
  bool first = true;
  std::size_t lineno = 0;
  for_each_line(text, [&](std::string_view line) {
    ++lineno;
    auto fields = split_line(line);
    if (first) {
      t.header = std::move(fields);
      first = false;
      return;
    }
    if (fields.size() != t.header.size())
      throw Error(ErrorKind::Schema, "CSV line " + std::to_string(lineno) + " has " +
                                         std::to_string(fields.size()) + " fields, expected " +
                                         std::to_string(t.header.size()));
    t.rows.push_back(std::move(fields));
  });
  if (first) throw Error(ErrorKind::Schema, "CSV input has no header");
  return t;
}

NumericTable parse_numeric(std::string_view text, std::size_t expected_columns) {
  NumericTable t;
  bool first = true;
  std::size_t lineno = 0;
  for_each_line(text, [&](std::string_view line) {
    ++lineno;
    if (first) {
      t.header = split_line(line);
      if (expected_columns && t.header.size() != expected_columns)
        throw Error(ErrorKind::Schema, "CSV header has " + std::to_string(t.header.size()) +
                                           " columns, expected " + std::to_string(expected_columns));
      t.columns.resize(t.header.size());
      first = false;
      return;
    }
    std::size_t col = 0, pos = 0;
    while (true) {
      auto comma = line.find(',', pos);
      auto field = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      if (col >= t.columns.size())
        throw Error(ErrorKind::Schema, "CSV line " + std::to_string(lineno) + " has too many fields");
      double v = 0.0;
      auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw Error(ErrorKind::Data, "CSV line " + std::to_string(lineno) + ": bad number '" +
                                         std::string(field) + "'");
      t.columns[col++].push_back(v);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (col != t.columns.size())
      throw Error(ErrorKind::Schema, "CSV line " + std::to_string(lineno) + " has " + std::to_string(col) +
                                         " fields, expected " + std::to_string(t.columns.size()));
  });
  if (first) throw Error(ErrorKind::Schema, "CSV input has no header");
  return t;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::NotFound, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Input, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

int to_int(const std::string& s, std::size_t row) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::Data, "row " + std::to_string(row + 1) + ": expected integer, got '" + s + "'");
  return v;
}

double to_double(const std::string& s, std::size_t row) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::Data, "row " + std::to_string(row + 1) + ": expected number, got '" + s + "'");
  return v;
}

void append_number(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

std::string format_number(double v) {
  std::string s;
  append_number(s, v);
  return s;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace meetbrain::csv

#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "eaplan/error.hpp"

namespace eaplan::csv {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view field) {
  field = trim(field);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw Error(Errc::ParseError, "not a number: '" + std::string(field) + "'");
  return value;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Numeric rows of a CSV document with a single header line. Blank lines and
/// lines starting with '#' are skipped.
inline std::vector<std::vector<double>> parse_numeric(std::string_view text, std::vector<std::string>* header = nullptr) {
  std::vector<std::vector<double>> rows;
  bool seen_header = false;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    const auto line = trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    start = (pos == std::string_view::npos) ? text.size() + 1 : pos + 1;
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      seen_header = true;
      if (header) {
        for (auto f : split(line)) header->emplace_back(f);
      }
      continue;
    }
    std::vector<double> row;
    for (auto f : split(line)) row.push_back(parse_double(f));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Shortest round-trippable formatting; locale independent and stable across runs.
inline std::string fmt(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace eaplan::csv

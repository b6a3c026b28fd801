// Copyright 2026 The namegauge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "namegauge/error.hpp"
#include "namegauge/io.hpp"

namespace namegauge::tsv {

/// Header plus rows of equal width. No quoting: cells must not contain tabs
/// or newlines.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    fail(ErrorKind::kFormat, "TSV has no column '" + std::string(name) + "'");
  }

  const std::string& cell(std::size_t row, std::string_view name) const {
    return rows[row][column(name)];
  }
};

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto end = line.find('\t', start);
    cells.emplace_back(line.substr(start, end == std::string_view::npos ? line.npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cells;
}

inline Table parse(std::string_view text) {
  Table t;
  const auto lines = io::split_lines(text);
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto cells = split_tabs(lines[i]);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != t.header.size()) {
      fail(ErrorKind::kFormat, "TSV line " + std::to_string(i + 1) + " has " +
                                   std::to_string(cells.size()) + " cells, header has " +
                                   std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) fail(ErrorKind::kFormat, "TSV is empty");
  return t;
}

inline Table load(const std::filesystem::path& path) {
  try {
    return parse(io::read_text(path));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

inline std::string format(const Table& t) {
  auto join = [](const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += '\t';
      line += cells[i];
    }
    line += '\n';
    return line;
  };
  std::string out = join(t.header);
  for (const auto& r : t.rows) out += join(r);
  return out;
}

/// Fixed-point rendering with `decimals` places; "-0.00" is printed as "0.00".
inline std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

/// Compact round-trippable rendering for machine-read columns.
inline std::string num(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

inline std::string num(const std::optional<double>& value) {
  return value ? num(*value) : std::string();
}

inline double to_double(const std::string& cell, std::string_view what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::kFormat, "expected a number for " + std::string(what) + ", got '" + cell + "'");
  }
}

}  // namespace namegauge::tsv

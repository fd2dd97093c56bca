/*
 * Copyright 2026 The MAMMO Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

#include "mammo/error.hpp"

// Minimal comma-separated reading and writing for the artifact files. Fields
// never contain commas or quotes, so no quoting is supported.
namespace mammo::csv {

std::vector<std::string> split(const std::string& line);

// printf "%.<precision>g"; 17 digits round-trips a double exactly.
std::string format(double v, int precision = 17);

template <typename T>
T parse(const std::string& s, std::size_t line, const std::string& column) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, v);
  if (s.empty() || r.ec != std::errc() || r.ptr != end) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": bad value '" + s +
                                "' in column '" + column + "'");
  }
  return v;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // source line of each row

  // Errors with "missing column <name>".
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

// Reads a headed file; blank lines are skipped, ragged rows rejected.
Table read(const std::filesystem::path& path);

}  // namespace mammo::csv

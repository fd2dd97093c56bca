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

#include "mammo/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace mammo::csv {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string format(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) fail(ErrorKind::kParse, "missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

bool Table::has_column(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

Table read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::kMissingArtifact, "cannot open " + path.string());
  Table t;
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::kParse, path.string() + ": empty file");
  t.header = split(line);
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = split(line);
    if (f.size() != t.header.size()) {
      fail(ErrorKind::kParse, path.string() + ": line " + std::to_string(line_no) +
                                  ": expected " + std::to_string(t.header.size()) +
                                  " fields, got " + std::to_string(f.size()));
    }
    t.rows.push_back(std::move(f));
    t.line_numbers.push_back(line_no);
  }
  return t;
}

}  // namespace mammo::csv

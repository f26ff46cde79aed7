#pragma once

#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlstack/errors.hpp"
#include "nlstack/materials.hpp"  // detail::trim / detail::parse_double

namespace nlstack {

struct XyData {
  std::string x_name, y_name;
  std::vector<double> x, y;
};

/// Read a two-column CSV with one header line, skipping '#' comments. This is
/// the shape every pattern/spectrum/sweep export of this library uses, so any
/// emitted file can be fed back into the fitting commands unchanged.
inline XyData read_xy_csv(std::istream& in) {
  XyData data;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(detail::trim(field));
    if (!header_seen) {
      if (fields.size() < 2)
        throw ParseError("line " + std::to_string(line_no) + ": expected 2-column header");
      data.x_name = fields[0];
      data.y_name = fields[1];
      header_seen = true;
      continue;
    }
    if (fields.size() < 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected 2 fields");
    data.x.push_back(detail::parse_double(fields[0], line_no));
    data.y.push_back(detail::parse_double(fields[1], line_no));
  }
  if (!header_seen) throw ParseError("missing CSV header");
  if (data.x.empty()) throw ParseError("CSV has no data rows");
  return data;
}

}  // namespace nlstack

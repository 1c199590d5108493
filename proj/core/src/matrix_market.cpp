/*
 * Copyright 2026 The issrsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "issrsim/error.hpp"
#include "issrsim/formats.hpp"

namespace issrsim::formats {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

CsrMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty MatrixMarket input");
  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket") throw FormatError("missing %%MatrixMarket banner");
  object = lower(object);
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (object != "matrix" || format != "coordinate") {
    throw FormatError("only 'matrix coordinate' files are supported");
  }
  if (field != "real" && field != "integer" && field != "pattern") {
    throw FormatError("unsupported field '" + field + "'");
  }
  if (symmetry != "general" && symmetry != "symmetric") {
    throw FormatError("unsupported symmetry '" + symmetry + "'");
  }
  const bool pattern = field == "pattern";
  const bool symmetric = symmetry == "symmetric";

  std::uint64_t rows = 0, cols = 0, entries = 0;
  for (;;) {
    if (!std::getline(in, line)) throw FormatError("missing size line");
    if (line.empty() || line[0] == '%') continue;
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> entries)) throw FormatError("malformed size line");
    break;
  }
  if (rows > std::numeric_limits<std::uint32_t>::max() ||
      cols > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("matrix dimensions exceed 32-bit indices");
  }

  std::map<std::pair<std::uint64_t, std::uint64_t>, double> cells;
  std::uint64_t seen = 0;
  while (seen < entries && std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream entry(line);
    std::uint64_t r = 0, c = 0;
    double v = 1.0;
    if (!(entry >> r >> c)) throw FormatError("malformed entry: '" + line + "'");
    if (!pattern && !(entry >> v)) throw FormatError("entry without value: '" + line + "'");
    if (r < 1 || r > rows || c < 1 || c > cols) {
      throw FormatError("entry (" + std::to_string(r) + ", " + std::to_string(c) +
                        ") outside the declared " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " matrix");
    }
    cells[{r - 1, c - 1}] += v;
    if (symmetric && r != c) cells[{c - 1, r - 1}] += v;
    ++seen;
  }
  if (seen != entries) {
    throw FormatError("expected " + std::to_string(entries) + " entries, found " +
                      std::to_string(seen));
  }

  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.ptr.assign(rows + 1, 0);
  m.indices.reserve(cells.size());
  m.values.reserve(cells.size());
  for (const auto& [rc, v] : cells) {
    ++m.ptr[rc.first + 1];
    m.indices.push_back(static_cast<std::uint32_t>(rc.second));
    m.values.push_back(v);
  }
  for (std::uint64_t r = 0; r < rows; ++r) m.ptr[r + 1] += m.ptr[r];
  m.validate();
  return m;
}

CsrMatrix load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return read_matrix_market(in);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_matrix_market(std::ostream& out, const CsrMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows << ' ' << m.cols << ' ' << m.nnz() << '\n';
  out << std::setprecision(17);
  for (std::uint64_t r = 0; r < m.rows; ++r) {
    for (std::uint32_t k = m.ptr[r]; k < m.ptr[r + 1]; ++k) {
      out << r + 1 << ' ' << m.indices[k] + 1 << ' ' << m.values[k] << '\n';
    }
  }
}

void save_matrix_market(const std::string& path, const CsrMatrix& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_matrix_market(out, m);
}

}  // namespace issrsim::formats

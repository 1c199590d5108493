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

#include "issrsim/formats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "issrsim/error.hpp"

namespace issrsim::formats {

void SparseFiber::validate() const {
  if (values.size() != indices.size()) throw FormatError("fiber value/index length mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= dimension) throw FormatError("fiber index out of range");
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw FormatError("fiber indices not strictly increasing");
    }
  }
}

double CsrMatrix::mean_row_nnz() const {
  return rows == 0 ? 0.0 : static_cast<double>(nnz()) / static_cast<double>(rows);
}

void CsrMatrix::validate() const {
  if (ptr.size() != rows + 1) throw FormatError("row pointer array has wrong length");
  if (ptr.front() != 0) throw FormatError("ptr[0] must be 0");
  if (ptr.back() != nnz() || indices.size() != nnz()) {
    throw FormatError("ptr[rows] does not match the nonzero count");
  }
  for (std::uint64_t r = 0; r < rows; ++r) {
    if (ptr[r + 1] < ptr[r]) throw FormatError("row pointers decrease");
    for (std::uint32_t k = ptr[r]; k < ptr[r + 1]; ++k) {
      if (indices[k] >= cols) throw FormatError("column index out of range");
      if (k > ptr[r] && indices[k] <= indices[k - 1]) {
        throw FormatError("column indices not strictly increasing in row " + std::to_string(r));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Random generation

std::uint64_t Rng::uniform(std::uint64_t bound) {
  if (bound == 0) throw ConfigError("uniform bound must be positive");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % bound;
}

double Rng::uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform01();
  } while (u1 == 0.0);
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<std::uint32_t> sample_distinct(Rng& rng, std::uint64_t n, std::uint64_t k) {
  if (k > n) throw ConfigError("cannot sample more distinct values than the range holds");
  std::set<std::uint64_t> chosen;
  for (std::uint64_t j = n - k; j < n; ++j) {
    const std::uint64_t t = rng.uniform(j + 1);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return {chosen.begin(), chosen.end()};
}

namespace {

void check_width(int index_width) {
  if (index_width != 16 && index_width != 32) throw ConfigError("index width must be 16 or 32");
}

}  // namespace

SparseFiber gen_sparse_vector(std::uint64_t n, std::uint64_t nnz, int index_width,
                              std::uint64_t seed) {
  check_width(index_width);
  if (nnz > n) throw ConfigError("n_nz exceeds the vector length");
  if (index_width == 16 && n > (1ull << 16)) {
    throw ConfigError("vector too long for 16-bit indices");
  }
  Rng rng(seed);
  SparseFiber f;
  f.dimension = n;
  f.indices = sample_distinct(rng, n, nnz);
  f.values.reserve(nnz);
  for (std::uint64_t k = 0; k < nnz; ++k) f.values.push_back(rng.normal());
  return f;
}

CsrMatrix gen_banded_csr(std::uint64_t rows, std::uint64_t cols, std::uint64_t nnz_per_row,
                         int index_width, std::uint64_t seed, bool diagonal) {
  check_width(index_width);
  if (nnz_per_row > cols) throw ConfigError("nonzeros per row exceed the column count");
  if (index_width == 16 && cols > (1ull << 16)) {
    throw ConfigError("too many columns for 16-bit indices");
  }
  if (rows * nnz_per_row > UINT32_MAX) throw ConfigError("matrix too large for 32-bit pointers");
  if (diagonal && nnz_per_row != 1) throw ConfigError("diagonal mode needs one nonzero per row");
  Rng rng(seed);
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.ptr.reserve(rows + 1);
  m.indices.reserve(rows * nnz_per_row);
  m.values.reserve(rows * nnz_per_row);
  for (std::uint64_t r = 0; r < rows; ++r) {
    if (diagonal) {
      m.indices.push_back(static_cast<std::uint32_t>(r % cols));
    } else {
      const auto cols_of_row = sample_distinct(rng, cols, nnz_per_row);
      m.indices.insert(m.indices.end(), cols_of_row.begin(), cols_of_row.end());
    }
    for (std::uint64_t k = 0; k < nnz_per_row; ++k) m.values.push_back(rng.normal());
    m.ptr.push_back(static_cast<std::uint32_t>(m.values.size()));
  }
  return m;
}

std::vector<double> gen_dense_vector(std::uint64_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& e : v) e = rng.normal();
  return v;
}

void require_index_width(const CsrMatrix& m, int index_width) {
  check_width(index_width);
  if (index_width == 16 && m.cols > (1ull << 16)) {
    throw FormatError("matrix has " + std::to_string(m.cols) +
                      " columns; 16-bit indices allow at most 65536");
  }
}

// ---------------------------------------------------------------------------
// References

double spvv_ref(const SparseFiber& a, std::span<const double> x) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.nnz(); ++k) acc = std::fma(a.values[k], x[a.indices[k]], acc);
  return acc;
}

std::vector<double> csrmv_ref(const CsrMatrix& a, std::span<const double> x) {
  if (x.size() < a.cols) throw ConfigError("dense vector shorter than the column count");
  std::vector<double> y(a.rows);
  for (std::uint64_t r = 0; r < a.rows; ++r) {
    double acc = 0.0;
    for (std::uint32_t k = a.ptr[r]; k < a.ptr[r + 1]; ++k) {
      acc = std::fma(a.values[k], x[a.indices[k]], acc);
    }
    y[r] = acc;
  }
  return y;
}

std::vector<double> csrmm_ref(const CsrMatrix& a, std::span<const double> b,
                              std::uint64_t b_cols) {
  if (b.size() < a.cols * b_cols) throw ConfigError("dense matrix smaller than cols x b_cols");
  std::vector<double> c(a.rows * b_cols);
  for (std::uint64_t r = 0; r < a.rows; ++r) {
    for (std::uint64_t j = 0; j < b_cols; ++j) {
      double acc = 0.0;
      for (std::uint32_t k = a.ptr[r]; k < a.ptr[r + 1]; ++k) {
        acc = std::fma(a.values[k], b[a.indices[k] * b_cols + j], acc);
      }
      c[r * b_cols + j] = acc;
    }
  }
  return c;
}

double staggered_dot(std::span<const double> values, std::span<const std::uint32_t> indices,
                     std::span<const double> x, std::uint64_t x_stride, int k, int reduce_over) {
  std::vector<double> acc(static_cast<std::size_t>(k), 0.0);
  for (std::size_t e = 0; e < values.size(); ++e) {
    double& a = acc[e % static_cast<std::size_t>(k)];
    a = std::fma(values[e], x[indices[e] * x_stride], a);
  }
  double sum = acc[0];
  for (int j = 1; j < reduce_over; ++j) sum = sum + acc[static_cast<std::size_t>(j)];
  return sum;
}

double spvv_ordered(const SparseFiber& a, std::span<const double> x, int k) {
  if (a.nnz() == 0) return 0.0;
  return staggered_dot(a.values, a.indices, x, 1, k, k);
}

std::vector<double> csrmv_ordered(const CsrMatrix& a, std::span<const double> x, int k,
                                  int unroll) {
  return csrmm_ordered(a, x, 1, k, unroll);
}

std::vector<double> csrmm_ordered(const CsrMatrix& a, std::span<const double> b,
                                  std::uint64_t b_cols, int k, int unroll) {
  if (unroll < 0) unroll = k;
  std::vector<double> c(a.rows * b_cols);
  for (std::uint64_t j = 0; j < b_cols; ++j) {
    const auto column = b.subspan(j);
    for (std::uint64_t r = 0; r < a.rows; ++r) {
      const std::uint32_t begin = a.ptr[r];
      const std::uint32_t n = a.ptr[r + 1] - begin;
      double v = 0.0;
      if (n > 0) {
        v = staggered_dot(std::span(a.values).subspan(begin, n),
                          std::span(a.indices).subspan(begin, n), column, b_cols, k,
                          static_cast<int>(n) <= unroll ? static_cast<int>(n) : k);
      }
      c[r * b_cols + j] = v;
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// Layout

MemoryLayout::MemoryLayout(std::uint64_t base, std::uint64_t limit)
    : base_(base), limit_(limit), cursor_(base) {}

std::uint64_t MemoryLayout::place(const std::string& name, std::uint64_t bytes,
                                  std::uint64_t align, std::uint64_t offset) {
  if (align == 0 || (align & (align - 1)) != 0) throw ConfigError("alignment must be a power of two");
  std::uint64_t address = (cursor_ + align - 1) & ~(align - 1);
  address += offset;
  if (address + bytes > limit_ || address + bytes < address) {
    throw ConfigError("memory layout overflow while placing '" + name + "'");
  }
  regions_.push_back({name, address, bytes});
  cursor_ = address + bytes;
  return address;
}

std::uint64_t MemoryLayout::place_at(const std::string& name, std::uint64_t address,
                                     std::uint64_t bytes) {
  for (const auto& r : regions_) {
    if (address < r.base + r.bytes && r.base < address + bytes) {
      throw ConfigError("region '" + name + "' overlaps '" + r.name + "'");
    }
  }
  if (address < base_ || address + bytes > limit_) {
    throw ConfigError("region '" + name + "' outside the memory");
  }
  regions_.push_back({name, address, bytes});
  cursor_ = std::max(cursor_, address + bytes);
  return address;
}

const Region& MemoryLayout::region(const std::string& name) const {
  for (const auto& r : regions_) {
    if (r.name == name) return r;
  }
  throw ConfigError("no region named '" + name + "'");
}

std::string MemoryLayout::describe() const {
  std::ostringstream os;
  for (const auto& r : regions_) {
    os << r.name << " 0x" << std::hex << r.base << " +0x" << r.bytes << std::dec << '\n';
  }
  return os.str();
}

void store_f64(mem::ByteStore& store, std::uint64_t address, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) store.write_f64(address + 8 * i, values[i]);
}

void store_indices(mem::ByteStore& store, std::uint64_t address,
                   std::span<const std::uint32_t> indices, int index_width) {
  const unsigned bytes = static_cast<unsigned>(index_width / 8);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    store.write(address + bytes * i, bytes, indices[i]);
  }
}

void store_u32(mem::ByteStore& store, std::uint64_t address, std::span<const std::uint32_t> values) {
  store_indices(store, address, values, 32);
}

std::vector<double> load_f64(const mem::ByteStore& store, std::uint64_t address, std::size_t count,
                             std::uint64_t stride) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = store.read_f64(address + stride * i);
  return out;
}

}  // namespace issrsim::formats

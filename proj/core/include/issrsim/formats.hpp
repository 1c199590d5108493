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

/**
 * @file formats.hpp
 * @brief Sparse containers, seeded generators, MatrixMarket I/O, memory
 *        layout helpers and reference kernels.
 *
 * Two flavours of reference exist. The naive ones accumulate each dot
 * product in index order with one fused multiply-add per element. The
 * ordered ones reproduce the accumulator partitioning of the streaming
 * kernels: element k goes to partial sum k mod K, and the partial sums are
 * reduced left to right.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "issrsim/mem.hpp"

namespace issrsim::formats {

struct SparseFiber {
  std::vector<double> values;
  std::vector<std::uint32_t> indices;
  std::uint64_t dimension = 0;

  std::size_t nnz() const { return values.size(); }
  /// Throws FormatError unless indices are in range and strictly increasing.
  void validate() const;
  bool operator==(const SparseFiber&) const = default;
};

struct CsrMatrix {
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<std::uint32_t> ptr{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }
  double mean_row_nnz() const;
  std::uint32_t row_nnz(std::uint64_t row) const { return ptr[row + 1] - ptr[row]; }
  /// Throws FormatError unless the CSR invariants hold.
  void validate() const;
  bool operator==(const CsrMatrix&) const = default;
};

/// Deterministic generator. Integer and normal draws are derived from raw
/// mt19937_64 output so sequences do not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [0, bound).
  std::uint64_t uniform(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double uniform01();
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// `nnz` distinct sorted uniform indices below n with standard-normal values.
SparseFiber gen_sparse_vector(std::uint64_t n, std::uint64_t nnz, int index_width,
                              std::uint64_t seed);
/// Every row holds exactly `nnz_per_row` sorted uniform columns. With
/// `diagonal` and one nonzero per row, row i holds column i mod cols.
CsrMatrix gen_banded_csr(std::uint64_t rows, std::uint64_t cols, std::uint64_t nnz_per_row,
                         int index_width, std::uint64_t seed, bool diagonal = false);
std::vector<double> gen_dense_vector(std::uint64_t n, std::uint64_t seed);
/// Sorted sample of `k` distinct integers below n (Floyd's algorithm).
std::vector<std::uint32_t> sample_distinct(Rng& rng, std::uint64_t n, std::uint64_t k);

/// Throws FormatError if column indices do not fit `index_width` bits.
void require_index_width(const CsrMatrix& m, int index_width);

CsrMatrix read_matrix_market(std::istream& in);
CsrMatrix load_matrix_market(const std::string& path);
/// Writes `real general` coordinate format with round-trip precision.
void write_matrix_market(std::ostream& out, const CsrMatrix& m);
void save_matrix_market(const std::string& path, const CsrMatrix& m);

// Naive references.
double spvv_ref(const SparseFiber& a, std::span<const double> x);
std::vector<double> csrmv_ref(const CsrMatrix& a, std::span<const double> x);
/// B is row-major with `b_cols` columns; the result is row-major rows x b_cols.
std::vector<double> csrmm_ref(const CsrMatrix& a, std::span<const double> b, std::uint64_t b_cols);

/// Dot product of the fiber slice with x[idx * x_stride] using `k` partial
/// sums, reducing the first `reduce_over` of them left to right.
double staggered_dot(std::span<const double> values, std::span<const std::uint32_t> indices,
                     std::span<const double> x, std::uint64_t x_stride, int k, int reduce_over);

// Order-replicating references of the streaming kernels. Rows with at
// most `unroll` nonzeros reduce only the partial sums they touched; longer
// rows reduce all `k`. A negative `unroll` means `unroll == k`.
double spvv_ordered(const SparseFiber& a, std::span<const double> x, int k);
std::vector<double> csrmv_ordered(const CsrMatrix& a, std::span<const double> x, int k,
                                  int unroll = -1);
std::vector<double> csrmm_ordered(const CsrMatrix& a, std::span<const double> b,
                                  std::uint64_t b_cols, int k, int unroll = -1);

struct Region {
  std::string name;
  std::uint64_t base = 0;
  std::uint64_t bytes = 0;
};

/// Bump allocator for memory images. `offset` places an array off its
/// natural alignment, e.g. to exercise unaligned index arrays.
class MemoryLayout {
 public:
  explicit MemoryLayout(std::uint64_t base = 0, std::uint64_t limit = UINT64_MAX);
  std::uint64_t place(const std::string& name, std::uint64_t bytes, std::uint64_t align = 8,
                      std::uint64_t offset = 0);
  /// Places at a fixed address; throws ConfigError on overlap.
  std::uint64_t place_at(const std::string& name, std::uint64_t address, std::uint64_t bytes);
  const std::vector<Region>& regions() const { return regions_; }
  const Region& region(const std::string& name) const;
  std::uint64_t end() const { return cursor_; }
  std::string describe() const;

 private:
  std::uint64_t base_;
  std::uint64_t limit_;
  std::uint64_t cursor_;
  std::vector<Region> regions_;
};

void store_f64(mem::ByteStore& store, std::uint64_t address, std::span<const double> values);
/// Stores indices as little-endian `index_width`-bit integers.
void store_indices(mem::ByteStore& store, std::uint64_t address,
                   std::span<const std::uint32_t> indices, int index_width);
void store_u32(mem::ByteStore& store, std::uint64_t address, std::span<const std::uint32_t> values);
std::vector<double> load_f64(const mem::ByteStore& store, std::uint64_t address, std::size_t count,
                             std::uint64_t stride = 8);

}  // namespace issrsim::formats
